//! Shielded episode execution and the unmodified baseline.
//!
//! Each step draws exactly one uniform variate from a ChaCha8 stream seeded by
//! the run seed, whether or not the step samples from a distribution. This
//! keeps the draw sequence aligned between shielded and unmodified runs.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::shield::{feasibility_vector, project_or_uniform, AuditRecord, ShieldError};
use crate::stl::{robustness, Formula, Monitor, StlError, Verdict};
use crate::surrogate::SurrogateModel;
use crate::synthesis::{policy_action, QTable};
use crate::world::{step, Action, Pose, Scene};

/// Version of the serialized [`RunRecord`] layout.
pub const RECORD_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("Q-table does not match the scene or specification: {0}")]
    QTableMismatch(String),
    #[error(transparent)]
    Stl(#[from] StlError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub t_max: usize,
    pub seed: u64,
    /// Required expected feasibility; only the hard constraint `1` is supported.
    pub delta: f64,
    /// Record per-step `(pi_FM, J, pi*)` triples.
    pub audit: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            t_max: 400,
            seed: 0,
            delta: 1.0,
            audit: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Shielded,
    Unmodified,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "shielded" => Ok(Mode::Shielded),
            "unmodified" => Ok(Mode::Unmodified),
            other => Err(format!("unknown mode '{other}' (expected shielded or unmodified)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Shielded => "shielded",
            Mode::Unmodified => "unmodified",
        })
    }
}

/// Which branch of the episode loop chose a step's action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Raw model sample: formula already satisfied, horizon passed, or
    /// unmodified mode.
    Unshielded,
    /// Sample from the projected distribution.
    Shielded,
    /// No feasible action; the synthesized policy acts.
    Fallback,
    /// After the main task, the synthesized policy completes the obligations.
    PostLoop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub mode: Mode,
    pub seed: u64,
    pub trajectory: Vec<Pose>,
    pub actions: Vec<Action>,
    pub phases: Vec<Phase>,
    pub stl_satisfied: bool,
    pub main_done: bool,
    /// `End` completed the main task while the model was near its goal.
    #[serde(default)]
    pub end_at_goal: bool,
    pub fallback_steps: usize,
    pub projected_steps: usize,
    pub final_robustness: f64,
    /// First time index at which the prefix verdict was `Satisfied`.
    pub satisfied_at: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub audit: Vec<AuditRecord>,
}

impl RunRecord {
    pub fn steps(&self) -> usize {
        self.actions.len()
    }
}

/// Per-episode seed: the first output of the ChaCha8 stream `index` under the
/// master seed.
pub fn episode_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// Robustness at time 0 of the trajectory, held at its final pose up to the
/// horizon (the robot stays put once the episode ends).
pub fn final_robustness(trajectory: &[Pose], spec: &Formula, scene: &Scene) -> Result<f64, StlError> {
    let need = spec.horizon() + 1;
    if trajectory.len() >= need {
        return robustness(trajectory, spec, 0, scene);
    }
    let mut padded = trajectory.to_vec();
    let last = *trajectory.last().expect("trajectories are non-empty");
    padded.resize(need, last);
    robustness(&padded, spec, 0, scene)
}

fn check_inputs(scene: &Scene, spec: &Formula, q: Option<&QTable>, cfg: &RunConfig) -> Result<usize, RuntimeError> {
    let horizon = spec.horizon();
    if cfg.t_max <= horizon {
        return Err(RuntimeError::Config(format!(
            "t_max {} must exceed the formula horizon {horizon}",
            cfg.t_max
        )));
    }
    if cfg.delta != 1.0 {
        return Err(RuntimeError::Config("only delta = 1 is supported".into()));
    }
    if let Some(q) = q {
        let d = q.dims();
        let map = scene.map();
        let ok = d.width as usize == map.width()
            && d.height as usize == map.height()
            && d.resolution == map.resolution()
            && d.heading_count == u32::from(scene.heading_count())
            && d.horizon as usize == horizon
            && d.conjuncts as usize == spec.conjuncts().len();
        if !ok {
            return Err(RuntimeError::QTableMismatch(format!("{d:?}")));
        }
    }
    Ok(horizon)
}

struct Episode<'a> {
    scene: &'a Scene,
    monitor: Monitor,
    trajectory: Vec<Pose>,
    actions: Vec<Action>,
    phases: Vec<Phase>,
    satisfied_at: Option<usize>,
}

impl<'a> Episode<'a> {
    fn new(scene: &'a Scene, spec: &Formula, start: Pose) -> Result<Self, StlError> {
        let mut monitor = Monitor::new(spec)?;
        monitor.push(&start, scene);
        let satisfied_at = (monitor.verdict() == Verdict::Satisfied).then_some(0);
        Ok(Self {
            scene,
            monitor,
            trajectory: vec![start],
            actions: Vec::new(),
            phases: Vec::new(),
            satisfied_at,
        })
    }

    fn pose(&self) -> Pose {
        *self.trajectory.last().expect("non-empty")
    }

    fn t(&self) -> usize {
        self.actions.len()
    }

    fn satisfied(&self) -> bool {
        self.monitor.verdict() == Verdict::Satisfied
    }

    fn apply(&mut self, a: Action, phase: Phase) {
        let next = step(&self.pose(), a, self.scene);
        self.monitor.push(&next, self.scene);
        self.trajectory.push(next);
        self.actions.push(a);
        self.phases.push(phase);
        if self.satisfied_at.is_none() && self.satisfied() {
            self.satisfied_at = Some(self.t());
        }
    }
}

/// Run one shielded episode.
///
/// While the main task is pending and `t < t_max`: sample the raw model once
/// the formula is satisfied or the horizon has passed; otherwise sample
/// the projection onto the feasible actions, or let the synthesized policy act
/// when none is feasible. Sampling `End` completes the main task when the model
/// gave it positive mass. Afterwards the synthesized policy acts until the
/// formula is satisfied or the horizon is reached.
pub fn execute_episode(
    scene: &Scene,
    spec: &Formula,
    q: &QTable,
    fm: &SurrogateModel,
    cfg: &RunConfig,
) -> Result<RunRecord, RuntimeError> {
    let horizon = check_inputs(scene, spec, Some(q), cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ep = Episode::new(scene, spec, scene.start())?;
    let mut main_done = false;
    let mut end_at_goal = false;
    let (mut fallback_steps, mut projected_steps) = (0, 0);
    let mut audit = Vec::new();

    while !main_done && ep.t() < cfg.t_max {
        let t = ep.t();
        let x = ep.pose();
        let pi = fm.distribution(&x);
        let u: f64 = rng.gen();
        let mut j_bits = None;
        let mut pi_star = None;
        let (a, phase) = if ep.satisfied() || t >= horizon {
            (pi.sample(u), Phase::Unshielded)
        } else {
            let j = feasibility_vector(&ep.trajectory, &ep.monitor, q, scene, spec);
            j_bits = Some(j.bits());
            match project_or_uniform(&pi, &j) {
                Ok(p) => {
                    pi_star = Some(p.probs());
                    projected_steps += 1;
                    let a = p.sample(u);
                    debug_assert!(j.get(a), "projected sample must be feasible");
                    (a, Phase::Shielded)
                }
                Err(ShieldError::Infeasible) => {
                    fallback_steps += 1;
                    (policy_action(q, &x, t, ep.monitor.status()), Phase::Fallback)
                }
                Err(e) => unreachable!("projection error {e} is resolved by the uniform fallback"),
            }
        };
        // End forced by the uniform tie-break carries no model mass and only waits.
        if a == Action::End && phase != Phase::Fallback && pi.prob(Action::End) > 0.0 {
            main_done = true;
            end_at_goal = fm.near_goal(&x);
        }
        if cfg.audit {
            audit.push(AuditRecord {
                t,
                pi_fm: pi.probs(),
                j: j_bits,
                pi_star,
                action: a,
            });
        }
        ep.apply(a, phase);
    }

    while !ep.satisfied() && ep.t() < horizon {
        let t = ep.t();
        let _: f64 = rng.gen();
        let a = policy_action(q, &ep.pose(), t, ep.monitor.status());
        ep.apply(a, Phase::PostLoop);
    }

    let final_robustness = final_robustness(&ep.trajectory, spec, scene)?;
    Ok(RunRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        mode: Mode::Shielded,
        seed: cfg.seed,
        stl_satisfied: final_robustness > 0.0,
        main_done,
        end_at_goal,
        fallback_steps,
        projected_steps,
        final_robustness,
        satisfied_at: ep.satisfied_at,
        trajectory: ep.trajectory,
        actions: ep.actions,
        phases: ep.phases,
        audit,
    })
}

/// Sample the raw model from `start` at time `t0` until `End` or `t_max`,
/// with the generator advanced past the first `t0` draws.
fn run_raw<'a>(
    scene: &'a Scene,
    spec: &Formula,
    fm: &SurrogateModel,
    cfg: &RunConfig,
    start: Pose,
    t0: usize,
) -> Result<(Episode<'a>, bool, bool, Vec<AuditRecord>), RuntimeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..t0 {
        let _: f64 = rng.gen();
    }
    let mut ep = Episode::new(scene, spec, start)?;
    let (mut main_done, mut end_at_goal) = (false, false);
    let mut audit = Vec::new();
    while !main_done && t0 + ep.t() < cfg.t_max {
        let pi = fm.distribution(&ep.pose());
        let a = pi.sample(rng.gen());
        main_done = a == Action::End;
        end_at_goal = main_done && fm.near_goal(&ep.pose());
        if cfg.audit {
            audit.push(AuditRecord {
                t: t0 + ep.t(),
                pi_fm: pi.probs(),
                j: None,
                pi_star: None,
                action: a,
            });
        }
        ep.apply(a, Phase::Unshielded);
    }
    Ok((ep, main_done, end_at_goal, audit))
}

/// Run the model without a shield from the scene start.
pub fn execute_unmodified(
    scene: &Scene,
    spec: &Formula,
    fm: &SurrogateModel,
    cfg: &RunConfig,
) -> Result<RunRecord, RuntimeError> {
    check_inputs(scene, spec, None, cfg)?;
    let (ep, main_done, end_at_goal, audit) = run_raw(scene, spec, fm, cfg, scene.start(), 0)?;
    let final_robustness = final_robustness(&ep.trajectory, spec, scene)?;
    Ok(RunRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        mode: Mode::Unmodified,
        seed: cfg.seed,
        stl_satisfied: final_robustness > 0.0,
        main_done,
        end_at_goal,
        fallback_steps: 0,
        projected_steps: 0,
        final_robustness,
        satisfied_at: ep.satisfied_at,
        trajectory: ep.trajectory,
        actions: ep.actions,
        phases: ep.phases,
        audit,
    })
}

/// Actions of the unmodified model restarted from `pose` at time `t0` with
/// the same seed, i.e. the draw stream continued at index `t0`.
pub fn replay_unmodified_from(
    scene: &Scene,
    spec: &Formula,
    fm: &SurrogateModel,
    cfg: &RunConfig,
    pose: Pose,
    t0: usize,
) -> Result<Vec<Action>, RuntimeError> {
    let (ep, _, _, _) = run_raw(scene, spec, fm, cfg, pose, t0)?;
    Ok(ep.actions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::parse_spec;
    use crate::surrogate::{Instruction, SurrogateConfig};
    use crate::synthesis::{synthesize, SynthesisConfig};

    fn room() -> Scene {
        Scene::from_json(
            r#"{
            "map": {"resolution": 0.25, "grid": [
                "..............",
                "..............",
                "..............",
                "..............",
                "..............",
                ".............."]},
            "regions": [
                {"name": "goal", "shape": "circle", "center": [3.125, 0.375], "radius": 0.3},
                {"name": "pad", "shape": "circle", "center": [1.625, 1.125], "radius": 0.3}
            ],
            "start": {"x": 0.375, "y": 0.375, "heading": 0},
            "goal_region": "goal"
        }"#,
        )
        .unwrap()
    }

    fn model(s: &Scene, cfg: SurrogateConfig) -> SurrogateModel {
        let instr = Instruction {
            goal_region: "goal".into(),
            label: String::new(),
        };
        SurrogateModel::new(s, &instr, &cfg).unwrap()
    }

    #[test]
    fn episode_seeds_differ_and_repeat() {
        assert_eq!(episode_seed(1, 0), episode_seed(1, 0));
        assert_ne!(episode_seed(1, 0), episode_seed(1, 1));
        assert_ne!(episode_seed(1, 0), episode_seed(2, 0));
    }

    #[test]
    fn satisfied_at_start_never_projects() {
        let s = room().with_start(Pose::new(1.625, 1.125, 0)).unwrap();
        let f = parse_spec("F[0,6] pad").unwrap();
        let syn = synthesize(
            &s,
            &f,
            &SynthesisConfig {
                episodes: 10,
                ..Default::default()
            },
        )
        .unwrap();
        let fm = model(&s, SurrogateConfig::default());
        let rec = execute_episode(
            &s,
            &f,
            &syn.q,
            &fm,
            &RunConfig {
                t_max: 60,
                seed: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(rec.projected_steps, 0);
        assert!(rec.phases.iter().all(|p| *p == Phase::Unshielded));
        assert!(rec.stl_satisfied);
    }

    #[test]
    fn shield_forces_a_detour() {
        let s = room();
        let f = parse_spec("F[0,14] pad").unwrap();
        let syn = synthesize(
            &s,
            &f,
            &SynthesisConfig {
                episodes: 4_000,
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let fm = model(&s, SurrogateConfig::default());
        for seed in 0..10 {
            let cfg = RunConfig {
                t_max: 80,
                seed,
                ..Default::default()
            };
            let rec = execute_episode(&s, &f, &syn.q, &fm, &cfg).unwrap();
            assert!(rec.stl_satisfied, "seed {seed}");
            assert_eq!(rec.trajectory.len(), rec.actions.len() + 1);
            assert_eq!(rec, execute_episode(&s, &f, &syn.q, &fm, &cfg).unwrap());
        }
    }

    #[test]
    fn never_ending_model_hits_t_max() {
        let s = room();
        let f = parse_spec("F[0,14] pad").unwrap();
        let fm = model(
            &s,
            SurrogateConfig {
                end_bonus: -1e6,
                ..Default::default()
            },
        );
        let rec = execute_unmodified(
            &s,
            &f,
            &fm,
            &RunConfig {
                t_max: 30,
                seed: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(rec.steps(), 30);
        assert!(!rec.main_done);
    }

    #[test]
    fn t_max_must_exceed_horizon() {
        let s = room();
        let f = parse_spec("F[0,14] pad").unwrap();
        let fm = model(&s, SurrogateConfig::default());
        assert!(matches!(
            execute_unmodified(
                &s,
                &f,
                &fm,
                &RunConfig {
                    t_max: 14,
                    ..Default::default()
                }
            ),
            Err(RuntimeError::Config(_))
        ));
    }

    #[test]
    fn padding_holds_the_last_pose() {
        let s = room();
        let f = parse_spec("F[3,5] pad").unwrap();
        let inside = Pose::new(1.625, 1.125, 0);
        assert!(final_robustness(&[inside], &f, &s).unwrap() > 0.0);
        assert!(final_robustness(&[s.start()], &f, &s).unwrap() < 0.0);
    }
}
