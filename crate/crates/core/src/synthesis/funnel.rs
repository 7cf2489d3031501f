//! Exponentially decaying funnel bound and the shaped reward built on it.

use serde::{Deserialize, Serialize};

use super::SynthesisError;
use crate::Scalar;

/// Funnel `gamma(t) = (gamma0 - gamma_inf) * exp(-ell * t) + gamma_inf`.
///
/// `rho_max` is the largest robustness of the state formula over the state
/// space; `t_star` is the step at which the funnel reaches `rho_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunnelParams<T> {
    pub gamma0: T,
    pub gamma_inf: T,
    pub ell: T,
    pub t_star: usize,
    pub rho_max: T,
}

impl<T: Scalar> FunnelParams<T> {
    /// Build the funnel from the robustness range of a state formula.
    ///
    /// `gamma0 = rho_max - rho_min`, `gamma_inf = gamma_inf_fraction * rho_max`
    /// and `ell = ln((gamma0 - gamma_inf) / (rho_max - gamma_inf)) / t_star`,
    /// which places `gamma(t_star) = rho_max`. When the formula holds
    /// everywhere (`rho_min > 0`) the minimum is taken as zero so the funnel
    /// never starts below `rho_max`.
    pub fn from_range(rho_max: T, rho_min: T, gamma_inf_fraction: T, t_star: usize) -> Result<Self, SynthesisError> {
        if !(rho_max > T::zero()) {
            return Err(SynthesisError::DegenerateRobustness(format!(
                "maximum robustness {rho_max} is not positive"
            )));
        }
        if !(gamma_inf_fraction > T::zero() && gamma_inf_fraction < T::one()) {
            return Err(SynthesisError::Config("gamma_inf fraction must lie in (0, 1)".into()));
        }
        if t_star == 0 {
            return Err(SynthesisError::IllegalTStar {
                t_star,
                lo: 1,
                hi: usize::MAX,
            });
        }
        let gamma0 = rho_max - rho_min.min(T::zero());
        let gamma_inf = gamma_inf_fraction * rho_max;
        let ell = ((gamma0 - gamma_inf) / (rho_max - gamma_inf)).ln() / T::from_count(t_star);
        Ok(Self {
            gamma0,
            gamma_inf,
            ell,
            t_star,
            rho_max,
        })
    }

    /// Funnel value at step `t`.
    #[inline]
    pub fn value(&self, t: usize) -> T {
        (self.gamma0 - self.gamma_inf) * (-self.ell * T::from_count(t)).exp() + self.gamma_inf
    }

    /// Reward of a state with state-formula robustness `rho` at step `t`:
    /// `rho + gamma(t) - rho_max`.
    #[inline]
    pub fn reward(&self, rho: T, t: usize) -> T {
        rho + self.value(t) - self.rho_max
    }
}

/// Free-function form of [`FunnelParams::value`].
pub fn funnel_value<T: Scalar>(p: &FunnelParams<T>, t: usize) -> T {
    p.value(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn anchors() {
        let p = FunnelParams::<f64>::from_range(1.0, -9.0, 0.05, 10).unwrap();
        assert_eq!(p.value(0), p.gamma0);
        assert_eq!(p.gamma0, 10.0);
        assert_relative_eq!(p.value(10), 1.0, max_relative = 1e-12);
        assert!((p.value(100) - p.gamma_inf).abs() < 1e-6 * p.gamma0);
    }

    #[test]
    fn single_precision() {
        let p = FunnelParams::<f32>::from_range(2.0, -3.0, 0.05, 10).unwrap();
        assert_relative_eq!(p.value(10), 2.0, max_relative = 1e-5);
    }

    #[test]
    fn reward_identities() {
        let p = FunnelParams::from_range(1.5, -4.0, 0.05, 8).unwrap();
        // least robust state at t = 0 earns exactly zero
        assert_eq!(p.reward(-4.0, 0), 0.0);
        // most robust state at t* earns rho_max
        assert_relative_eq!(p.reward(1.5, 8), 1.5, max_relative = 1e-12);
    }

    #[test]
    fn non_positive_maximum_is_degenerate() {
        assert!(matches!(
            FunnelParams::from_range(0.0, -1.0, 0.05, 3),
            Err(SynthesisError::DegenerateRobustness(_))
        ));
    }
}
