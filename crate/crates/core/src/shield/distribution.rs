use serde::{Deserialize, Serialize};

use super::ShieldError;
use crate::world::Action;
use crate::Scalar;

/// Probability vector over the four actions, indexed by [`Action::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionDistribution<T> {
    probs: [T; 4],
}

fn tolerance<T: Scalar>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(16.0))
}

impl<T: Scalar> ActionDistribution<T> {
    /// Validated constructor: entries in `[0, 1]` summing to one.
    pub fn new(probs: [T; 4]) -> Result<Self, ShieldError> {
        if probs.iter().any(|p| !(*p >= T::zero() && *p <= T::one())) {
            return Err(ShieldError::InvalidDistribution(format!(
                "entries must lie in [0, 1]: {probs:?}"
            )));
        }
        let sum = probs.iter().fold(T::zero(), |a, b| a + *b);
        if (sum - T::one()).abs() > tolerance() {
            return Err(ShieldError::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(Self { probs })
    }

    /// Normalize non-negative weights.
    pub fn from_weights(w: [T; 4]) -> Result<Self, ShieldError> {
        if w.iter().any(|x| !(*x >= T::zero()) || !x.is_finite()) {
            return Err(ShieldError::InvalidDistribution(
                "weights must be finite and non-negative".into(),
            ));
        }
        let z = w.iter().fold(T::zero(), |a, b| a + *b);
        if !(z > T::zero()) {
            return Err(ShieldError::InvalidDistribution("weights sum to zero".into()));
        }
        Ok(Self {
            probs: w.map(|x| x / z),
        })
    }

    /// Softmax of `scores / temperature`.
    pub fn softmax(scores: [T; 4], temperature: T) -> Self {
        let scaled = scores.map(|s| s / temperature);
        let m = scaled.iter().copied().fold(T::neg_infinity(), T::max);
        let w = scaled.map(|s| (s - m).exp());
        let z = w.iter().fold(T::zero(), |a, b| a + *b);
        Self {
            probs: w.map(|x| x / z),
        }
    }

    pub fn uniform() -> Self {
        Self {
            probs: [T::lit(0.25); 4],
        }
    }

    /// Unchecked constructor for results of normalizations in this crate.
    pub(crate) fn from_raw(probs: [T; 4]) -> Self {
        Self { probs }
    }

    #[inline]
    pub fn probs(&self) -> [T; 4] {
        self.probs
    }

    #[inline]
    pub fn prob(&self, a: Action) -> T {
        self.probs[a.index()]
    }

    /// First action with the largest probability.
    pub fn argmax(&self) -> Action {
        let mut best = 0;
        for i in 1..4 {
            if self.probs[i] > self.probs[best] {
                best = i;
            }
        }
        Action::from_index(best)
    }

    /// Inverse-CDF sample for `u` in `[0, 1)`. Never returns a zero-probability
    /// action.
    pub fn sample(&self, u: T) -> Action {
        let mut acc = T::zero();
        let mut last = None;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > T::zero() {
                acc = acc + p;
                last = Some(i);
                if u < acc {
                    return Action::from_index(i);
                }
            }
        }
        // rounding left u above the accumulated mass
        Action::from_index(last.unwrap_or_else(|| self.argmax().index()))
    }

    pub fn to_f64(&self) -> [f64; 4] {
        self.probs.map(|p| p.to_f64().unwrap_or(f64::NAN))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_off_simplex() {
        assert!(ActionDistribution::new([0.5, 0.5, 0.5, 0.0]).is_err());
        assert!(ActionDistribution::new([-0.1, 0.6, 0.5, 0.0]).is_err());
        assert!(ActionDistribution::new([f64::NAN, 0.5, 0.5, 0.0]).is_err());
    }

    #[test]
    fn sampling_skips_zero_entries() {
        let d = ActionDistribution::new([0.0, 0.5, 0.0, 0.5]).unwrap();
        assert_eq!(d.sample(0.0), Action::RotateLeft);
        assert_eq!(d.sample(0.4999), Action::RotateLeft);
        assert_eq!(d.sample(0.5), Action::End);
        assert_eq!(d.sample(0.9999999), Action::End);
    }

    #[test]
    fn huge_temperature_is_uniform() {
        let d = ActionDistribution::<f64>::softmax([-3.0, -10.0, 5.0, -1000.0], 1e6);
        for p in d.probs() {
            assert!((p - 0.25).abs() < 1e-3);
        }
    }

    proptest! {
        #[test]
        fn softmax_on_simplex(s in prop::array::uniform4(-1e4f64..1e4), temp in 1e-3f64..1e3) {
            let d = ActionDistribution::softmax(s, temp);
            prop_assert!(ActionDistribution::new(d.probs()).is_ok());
        }

        #[test]
        fn sample_has_positive_probability(w in prop::array::uniform4(prop_oneof![Just(0.0), 1e-9f64..1.0]), u in 0.0f64..1.0) {
            if let Ok(d) = ActionDistribution::from_weights(w) {
                prop_assert!(d.prob(d.sample(u)) > 0.0);
            }
        }
    }
}
