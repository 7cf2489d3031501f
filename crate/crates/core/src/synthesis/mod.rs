//! Policy synthesis: funnel-shaped rewards over the top-level conjuncts of a
//! formula and tabular Q-learning on the discretized scene.

mod funnel;
mod qtable;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stl::{eval_nontemporal, Formula, Interval, NonTemporal, StatusMask, StlError};
use crate::world::{Pose, Scene, WorldError};

pub use funnel::{funnel_value, FunnelParams};
pub use qtable::{argmax_action, policy_action, QDims, QTable, StateKey, FORMAT_VERSION};
pub use train::{
    follow_policy, greedy_rollout, rollout_verdict, synthesize, train_policy, EpsilonSchedule, Synthesis,
    SynthesisConfig, SynthesisReport,
};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("degenerate robustness: {0}")]
    DegenerateRobustness(String),
    #[error("t* = {t_star} is outside the legal range [{lo}, {hi}]")]
    IllegalTStar { t_star: usize, lo: usize, hi: usize },
    #[error("invalid synthesis configuration: {0}")]
    Config(String),
    #[error("synthesis gate failed after {attempts} attempts ({episodes} episodes, rollout robustness {robustness})")]
    GateFailed {
        attempts: usize,
        episodes: usize,
        robustness: f64,
    },
    #[error("malformed Q-table: {0}")]
    Format(String),
    #[error(transparent)]
    Stl(#[from] StlError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Shaping data for one top-level conjunct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjunctPlan {
    pub conjunct: Formula,
    pub funnel: FunnelParams<f64>,
    pub window: Interval,
}

impl ConjunctPlan {
    /// The state formula under the temporal operator.
    pub fn state_formula(&self) -> &NonTemporal {
        state_formula(&self.conjunct)
    }
}

fn state_formula(conjunct: &Formula) -> &NonTemporal {
    match conjunct {
        Formula::State(g) | Formula::Eventually(_, g) | Formula::Always(_, g) | Formula::EventuallyAlways(_, _, g) => g,
        Formula::And(..) => unreachable!("conjuncts are flattened"),
    }
}

/// Legal `t*` range and default for a conjunct. Ranges are clamped below at 1
/// because the decay rate divides by `t*`.
pub fn t_star_range(conjunct: &Formula) -> (usize, usize, usize) {
    let clamp = |(lo, hi, d): (usize, usize, usize)| (lo.max(1), hi.max(1), d.max(1));
    match conjunct {
        Formula::State(_) => clamp((0, 0, 0)),
        Formula::Eventually(w, _) => clamp((w.lo(), w.hi(), (w.lo() + w.hi()).div_ceil(2))),
        Formula::Always(w, _) => clamp((w.lo(), w.lo(), w.lo())),
        Formula::EventuallyAlways(outer, inner, _) => {
            let (a, c1, c2) = (outer.lo(), outer.hi(), inner.lo());
            clamp((a + c2, c1 + c2, a + c2 + (c1 - a).div_ceil(2)))
        }
        Formula::And(..) => unreachable!("conjuncts are flattened"),
    }
}

/// Largest and smallest robustness of `g` over the centers of cells the
/// footprint can occupy.
pub fn robustness_range(g: &NonTemporal, scene: &Scene) -> (f64, f64) {
    let map = scene.map();
    let free = map.traversable(scene.footprint_radius());
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for (i, _) in free.iter().enumerate().filter(|(_, &ok)| ok) {
        let (x, y) = map.cell_center(i);
        let v: f64 = eval_nontemporal(&Pose::new(x, y, 0), g, scene);
        hi = hi.max(v);
        lo = lo.min(v);
    }
    (hi, lo)
}

/// Funnel parameters for one conjunct. `t_star_choice` of `None` selects the
/// default from [`t_star_range`].
pub fn funnel_params(
    conjunct: &Formula,
    scene: &Scene,
    t_star_choice: Option<usize>,
    gamma_inf_fraction: f64,
) -> Result<FunnelParams<f64>, SynthesisError> {
    if matches!(conjunct, Formula::And(..)) {
        return Err(SynthesisError::Config(
            "funnel parameters are defined per conjunct".into(),
        ));
    }
    let (lo, hi, default) = t_star_range(conjunct);
    let t_star = t_star_choice.unwrap_or(default);
    if t_star < lo || t_star > hi {
        return Err(SynthesisError::IllegalTStar { t_star, lo, hi });
    }
    let g = state_formula(conjunct);
    let (rho_max, rho_min) = robustness_range(g, scene);
    if !(rho_max > 0.0) {
        return Err(SynthesisError::DegenerateRobustness(format!(
            "'{g}' holds at no reachable cell (max robustness {rho_max})"
        )));
    }
    FunnelParams::from_range(rho_max, rho_min, gamma_inf_fraction, t_star)
}

/// One [`ConjunctPlan`] per top-level conjunct of `spec`.
pub fn plan_conjuncts(
    spec: &Formula,
    scene: &Scene,
    t_star: &[Option<usize>],
    gamma_inf_fraction: f64,
) -> Result<Vec<ConjunctPlan>, SynthesisError> {
    scene.check_formula(spec)?;
    spec.conjuncts()
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let choice = t_star.get(i).copied().flatten();
            let window = match c {
                Formula::State(_) => Interval::new(0, 0)?,
                Formula::Eventually(w, _) | Formula::Always(w, _) => *w,
                Formula::EventuallyAlways(outer, _, _) => *outer,
                Formula::And(..) => unreachable!("conjuncts are flattened"),
            };
            Ok(ConjunctPlan {
                conjunct: c.clone(),
                funnel: funnel_params(c, scene, choice, gamma_inf_fraction)?,
                window,
            })
        })
        .collect()
}

/// Minimum shaped reward over conjuncts still pending in `status`; zero once
/// every conjunct is resolved.
pub fn shaped_reward(state: &Pose, t: usize, plans: &[ConjunctPlan], status: StatusMask, scene: &Scene) -> f64 {
    let mut r = f64::INFINITY;
    for (i, p) in plans.iter().enumerate() {
        if status.get(i).is_resolved() {
            continue;
        }
        let rho: f64 = eval_nontemporal(state, p.state_formula(), scene);
        r = r.min(p.funnel.reward(rho, t));
    }
    if r.is_finite() {
        r
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::{parse_spec, ConjunctStatus};
    use approx::assert_relative_eq;

    pub(crate) fn open_scene() -> Scene {
        Scene::from_json(
            r#"{
            "map": {"resolution": 0.25, "grid": [
                "............",
                "............",
                "............",
                "............",
                "............",
                "............"]},
            "regions": [
                {"name": "r", "shape": "circle", "center": [2.375, 1.125], "radius": 0.5},
                {"name": "far", "shape": "rect", "min": [2.9, 1.4], "max": [3.0, 1.5]}
            ],
            "start": {"x": 0.625, "y": 0.625, "heading": 0},
            "goal_region": "r"
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn always_t_star_is_window_start() {
        let s = open_scene();
        let f = parse_spec("G[4,9] !r").unwrap();
        let p = funnel_params(&f, &s, None, 0.05).unwrap();
        assert_eq!(p.t_star, 4);
        assert!(matches!(
            funnel_params(&f, &s, Some(5), 0.05),
            Err(SynthesisError::IllegalTStar {
                t_star: 5,
                lo: 4,
                hi: 4
            })
        ));
    }

    #[test]
    fn default_t_star_choices() {
        let f = parse_spec("F[3,8] r").unwrap();
        assert_eq!(t_star_range(&f), (3, 8, 6));
        let fg = parse_spec("F[2,5] G[1,8] r").unwrap();
        assert_eq!(t_star_range(&fg), (3, 6, 5));
        let g0 = parse_spec("G[0,10] r").unwrap();
        assert_eq!(t_star_range(&g0), (1, 1, 1));
    }

    #[test]
    fn rho_max_matches_best_cell_center() {
        let s = open_scene();
        let f = parse_spec("F[0,5] r").unwrap();
        let p = funnel_params(&f, &s, None, 0.05).unwrap();
        // the circle center coincides with the center of cell (9, 4)
        assert_relative_eq!(p.rho_max, 0.5, max_relative = 1e-12);
        assert_relative_eq!(p.value(p.t_star), p.rho_max, max_relative = 1e-9);
    }

    #[test]
    fn unreachable_region_is_degenerate() {
        let s = open_scene();
        // the footprint cannot reach the center of the corner square
        let f = parse_spec("F[0,5] far").unwrap();
        assert!(matches!(
            funnel_params(&f, &s, None, 0.05),
            Err(SynthesisError::DegenerateRobustness(_))
        ));
    }

    #[test]
    fn reward_anchor_points() {
        let s = open_scene();
        let f = parse_spec("F[0,8] r").unwrap();
        let plans = plan_conjuncts(&f, &s, &[], 0.05).unwrap();
        let g = plans[0].state_formula();
        let map = s.map();
        let free = map.traversable(s.footprint_radius());
        let centers: Vec<Pose> = (0..map.cell_count())
            .filter(|&i| free[i])
            .map(|i| {
                let (x, y) = map.cell_center(i);
                Pose::new(x, y, 0)
            })
            .collect();
        let by_rho = |p: &Pose| -> f64 { eval_nontemporal(p, g, &s) };
        let worst = centers.iter().min_by(|a, b| by_rho(a).total_cmp(&by_rho(b))).unwrap();
        let best = centers.iter().max_by(|a, b| by_rho(a).total_cmp(&by_rho(b))).unwrap();
        let st = StatusMask::default();
        assert!(shaped_reward(worst, 0, &plans, st, &s).abs() < 1e-12);
        let t_star = plans[0].funnel.t_star;
        assert_relative_eq!(
            shaped_reward(best, t_star, &plans, st, &s),
            plans[0].funnel.rho_max,
            max_relative = 1e-9
        );
        let done = st.with(0, ConjunctStatus::Satisfied);
        assert_eq!(shaped_reward(best, 3, &plans, done, &s), 0.0);
    }
}
