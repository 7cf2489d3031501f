//! Rollout feasibility of candidate actions and the KL-minimal projection of
//! an action distribution onto the feasible actions.

mod distribution;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stl::{robustness, Formula, Monitor};
use crate::synthesis::{follow_policy, QTable};
use crate::world::{step, Action, Pose, Scene};
use crate::Scalar;

pub use distribution::ActionDistribution;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShieldError {
    #[error("no action admits a satisfying continuation")]
    Infeasible,
    #[error("feasible actions carry no probability mass")]
    DegenerateMass,
    #[error("invalid action distribution: {0}")]
    InvalidDistribution(String),
}

/// Binary feasibility `J` per action; the feasible set is `{a | J(a) = 1}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeasibilityVector(pub [bool; 4]);

impl FeasibilityVector {
    pub const ALL: FeasibilityVector = FeasibilityVector([true; 4]);
    pub const NONE: FeasibilityVector = FeasibilityVector([false; 4]);

    #[inline]
    pub fn get(&self, a: Action) -> bool {
        self.0[a.index()]
    }

    /// `J` as 0/1.
    pub fn bits(&self) -> [u8; 4] {
        self.0.map(u8::from)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&j| j).count()
    }

    /// True when no action is feasible.
    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn feasible(&self) -> impl Iterator<Item = Action> + '_ {
        Action::ALL.into_iter().filter(|a| self.get(*a))
    }
}

/// Hard-constraint satisfaction level; only `delta = 1` carries guarantees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShieldConfig {
    pub delta: f64,
}

impl Default for ShieldConfig {
    fn default() -> Self {
        Self { delta: 1.0 }
    }
}

/// KL-minimal distribution supported on the feasible set:
/// `pi*(a) = pi(a) / sum_{b feasible} pi(b)` for feasible `a`, else 0.
pub fn project_distribution<T: Scalar>(
    pi: &ActionDistribution<T>,
    j: &FeasibilityVector,
) -> Result<ActionDistribution<T>, ShieldError> {
    if j.is_empty() {
        return Err(ShieldError::Infeasible);
    }
    let mass = Action::ALL
        .iter()
        .filter(|a| j.get(**a))
        .fold(T::zero(), |acc, a| acc + pi.prob(*a));
    if mass < T::lit(1e-12) {
        return Err(ShieldError::DegenerateMass);
    }
    let probs = Action::ALL.map(|a| if j.get(a) { pi.prob(a) / mass } else { T::zero() });
    Ok(ActionDistribution::from_raw(probs))
}

/// [`project_distribution`], resolving zero feasible mass with the uniform
/// distribution over the feasible set.
pub fn project_or_uniform<T: Scalar>(
    pi: &ActionDistribution<T>,
    j: &FeasibilityVector,
) -> Result<ActionDistribution<T>, ShieldError> {
    match project_distribution(pi, j) {
        Err(ShieldError::DegenerateMass) => {
            let share = T::one() / T::from_count(j.count());
            Ok(ActionDistribution::from_raw(Action::ALL.map(|a| {
                if j.get(a) {
                    share
                } else {
                    T::zero()
                }
            })))
        }
        other => other,
    }
}

/// Exponential family `pi(a) exp(-lambda J(a)) / Z`. Negative `lambda`
/// shifts mass onto feasible actions and tends to the projection as
/// `lambda -> -inf`.
pub fn exponential_tilt<T: Scalar>(
    pi: &ActionDistribution<T>,
    j: &FeasibilityVector,
    lambda: T,
) -> ActionDistribution<T> {
    if lambda == T::zero() {
        return *pi;
    }
    let logits = Action::ALL.map(|a| {
        let p = pi.prob(a);
        if p > T::zero() {
            let jv = if j.get(a) { T::one() } else { T::zero() };
            p.ln() - lambda * jv
        } else {
            T::neg_infinity()
        }
    });
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let w = logits.map(|l| {
        if l == T::neg_infinity() {
            T::zero()
        } else {
            (l - m).exp()
        }
    });
    let z = w.iter().copied().fold(T::zero(), |a, b| a + b);
    ActionDistribution::from_raw(w.map(|x| x / z))
}

/// `KL(p || q) = sum p ln(p / q)`, infinite when `p` puts mass where `q` has
/// none.
pub fn kl_divergence<T: Scalar>(p: &ActionDistribution<T>, q: &ActionDistribution<T>) -> T {
    let mut kl = T::zero();
    for a in Action::ALL {
        let (pa, qa) = (p.prob(a), q.prob(a));
        if pa > T::zero() {
            if qa > T::zero() {
                kl = kl + pa * (pa / qa).ln();
            } else {
                return T::infinity();
            }
        }
    }
    kl
}

/// Predicted trajectory `x~_{0:T}`: the executed prefix, then `a`, then the
/// greedy policy up to the horizon. `monitor` must hold exactly `prefix`.
pub fn rollout_trace(
    prefix: &[Pose],
    monitor: &Monitor,
    a: Action,
    q: &QTable,
    scene: &Scene,
    horizon: usize,
) -> Vec<Pose> {
    let t = prefix.len() - 1;
    let mut trace = Vec::with_capacity(horizon.max(t + 1) + 1);
    trace.extend_from_slice(prefix);
    let next = step(&prefix[t], a, scene);
    trace.push(next);
    let mut m = monitor.clone();
    m.push(&next, scene);
    follow_policy(q, scene, &mut m, next, t + 1, horizon, &mut trace);
    trace
}

/// `J(prefix, a)`: whether applying `a` at time `t = prefix.len() - 1` and
/// then following the greedy policy yields positive robustness at time 0.
pub fn evaluate_action(
    prefix: &[Pose],
    monitor: &Monitor,
    a: Action,
    q: &QTable,
    scene: &Scene,
    spec: &Formula,
) -> bool {
    debug_assert_eq!(monitor.len(), prefix.len());
    let horizon = spec.horizon();
    let trace = rollout_trace(prefix, monitor, a, q, scene, horizon);
    matches!(robustness(&trace, spec, 0, scene), Ok(r) if r > 0.0)
}

/// [`evaluate_action`] for every action.
pub fn feasibility_vector(
    prefix: &[Pose],
    monitor: &Monitor,
    q: &QTable,
    scene: &Scene,
    spec: &Formula,
) -> FeasibilityVector {
    FeasibilityVector(Action::ALL.map(|a| evaluate_action(prefix, monitor, a, q, scene, spec)))
}

/// One audited decision step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub t: usize,
    pub pi_fm: [f64; 4],
    pub j: Option<[u8; 4]>,
    pub pi_star: Option<[f64; 4]>,
    pub action: Action,
}
