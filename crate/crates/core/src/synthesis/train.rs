use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::qtable::{policy_action, QDims, QTable, StateKey};
use super::{plan_conjuncts, shaped_reward, ConjunctPlan, SynthesisError};
use crate::stl::{robustness, Formula, Monitor, StatusMask, Verdict};
use crate::world::{step, Action, Pose, Scene};

/// Linear exploration decay from `start` to `end` over `decay_episodes`
/// episodes; `None` decays over 80% of the episode budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_episodes: Option<usize>,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.05,
            decay_episodes: None,
        }
    }
}

impl EpsilonSchedule {
    pub fn at(&self, episode: usize, budget: usize) -> f64 {
        let span = self.decay_episodes.unwrap_or(budget * 4 / 5).max(1);
        if episode >= span {
            return self.end;
        }
        let frac = episode as f64 / span as f64;
        self.start + (self.end - self.start) * frac
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    pub episodes: usize,
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon_schedule: EpsilonSchedule,
    pub seed: u64,
    /// `gamma_inf` as a fraction of `rho_max`.
    pub gamma_inf_fraction: f64,
    /// Per-conjunct `t*` overrides; missing or `null` entries use the default.
    pub t_star: Vec<Option<usize>>,
    /// Subtracted from the step reward for every conjunct that becomes
    /// violated on that step.
    pub violation_penalty: f64,
    /// Fraction of episodes that start from a uniformly drawn free cell
    /// center and heading instead of the scene start. Widens the set of
    /// states where the greedy policy is trained.
    pub exploring_starts: f64,
    /// Training attempts, doubling the episode budget each time, before the
    /// gate gives up.
    pub max_attempts: usize,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            episodes: 200_000,
            learning_rate: 0.1,
            discount: 0.99,
            epsilon_schedule: EpsilonSchedule::default(),
            seed: 0,
            gamma_inf_fraction: 0.05,
            t_star: Vec::new(),
            violation_penalty: 1_000.0,
            exploring_starts: 0.0,
            max_attempts: 4,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<(), SynthesisError> {
        let bad = |m: &str| Err(SynthesisError::Config(m.into()));
        if self.episodes == 0 {
            return bad("episodes must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return bad("discount must lie in (0, 1]");
        }
        let e = &self.epsilon_schedule;
        if !((0.0..=1.0).contains(&e.start) && (0.0..=1.0).contains(&e.end)) {
            return bad("epsilon must lie in [0, 1]");
        }
        if !(self.violation_penalty >= 0.0) {
            return bad("violation_penalty must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.exploring_starts) {
            return bad("exploring_starts must lie in [0, 1]");
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be positive");
        }
        Ok(())
    }
}

/// Outcome of [`synthesize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub gate_passed: bool,
    pub attempts: usize,
    pub episodes: usize,
    pub horizon: usize,
    pub rollout_robustness: f64,
    pub states: usize,
    pub plans: Vec<ConjunctPlan>,
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    pub q: QTable,
    pub report: SynthesisReport,
}

struct Transition {
    key: StateKey,
    action: usize,
    reward: f64,
    next: Option<StateKey>,
}

fn dims_for(scene: &Scene, horizon: usize, conjuncts: usize) -> QDims {
    let map = scene.map();
    QDims {
        width: map.width() as u32,
        height: map.height() as u32,
        resolution: map.resolution(),
        heading_count: u32::from(scene.heading_count()),
        horizon: horizon as u32,
        conjuncts: conjuncts as u32,
    }
}

fn all_resolved(status: StatusMask, n: usize) -> bool {
    (0..n).all(|i| status.get(i).is_resolved())
}

/// Every collision-free cell center with every heading.
fn free_poses(scene: &Scene) -> Vec<Pose> {
    let map = scene.map();
    let free = map.traversable(scene.footprint_radius());
    let mut out = Vec::new();
    for (cell, ok) in free.iter().enumerate() {
        if !ok {
            continue;
        }
        let (x, y) = map.cell_center(cell);
        for h in 0..scene.heading_count() {
            let p = Pose::new(x, y, h);
            if scene.is_valid(&p) {
                out.push(p);
            }
        }
    }
    out
}

fn check_spec(spec: &Formula) -> Result<usize, SynthesisError> {
    let horizon = spec.horizon();
    if horizon == 0 {
        return Err(SynthesisError::Config(
            "specification horizon must be at least 1".into(),
        ));
    }
    if horizon > usize::from(u16::MAX) {
        return Err(SynthesisError::Config(format!(
            "horizon {horizon} exceeds {}",
            u16::MAX
        )));
    }
    Ok(horizon)
}

fn train_with_plans(
    scene: &Scene,
    spec: &Formula,
    plans: &[ConjunctPlan],
    cfg: &SynthesisConfig,
    episodes: usize,
) -> Result<QTable, SynthesisError> {
    let horizon = check_spec(spec)?;
    let n = plans.len();
    let mut q = QTable::new(dims_for(scene, horizon, n));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let root = Monitor::new(spec)?;
    let mut episode: Vec<Transition> = Vec::with_capacity(horizon);
    let (alpha, discount) = (cfg.learning_rate, cfg.discount);
    let starts = if cfg.exploring_starts > 0.0 {
        free_poses(scene)
    } else {
        Vec::new()
    };

    for ep in 0..episodes {
        let eps = cfg.epsilon_schedule.at(ep, episodes);
        let mut pose = scene.start();
        if !starts.is_empty() && rng.gen::<f64>() < cfg.exploring_starts {
            pose = starts[rng.gen_range(0..starts.len())];
        }
        let mut monitor = root.clone();
        monitor.push(&pose, scene);
        let mut status = monitor.status();
        episode.clear();

        let mut t = 0;
        while t < horizon && !all_resolved(status, n) {
            let key = q.key(&pose, t, status);
            let action = if rng.gen::<f64>() < eps {
                rng.gen_range(0..Action::COUNT)
            } else {
                q.greedy(&key).index()
            };
            let next = step(&pose, Action::from_index(action), scene);
            let mut reward = shaped_reward(&next, t + 1, plans, status, scene);
            monitor.push(&next, scene);
            let after = monitor.status();
            reward -= cfg.violation_penalty * after.newly_violated(status, n) as f64;
            let terminal = t + 1 == horizon || all_resolved(after, n);
            episode.push(Transition {
                key,
                action,
                reward,
                next: (!terminal).then(|| q.key(&next, t + 1, after)),
            });
            pose = next;
            status = after;
            t += 1;
        }

        // Backward sweep so a terminal outcome reaches the start in one episode.
        for tr in episode.iter().rev() {
            let target = tr.reward
                + match tr.next {
                    Some(k) => discount * q.get(&k).iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    None => 0.0,
                };
            let slot = &mut q.get_mut(tr.key)[tr.action];
            *slot += alpha * (target - *slot);
        }
    }
    Ok(q)
}

/// Episodic epsilon-greedy Q-learning over (cell, heading, t, status) for
/// `cfg.episodes` episodes of `horizon(spec)` steps. Deterministic in
/// `cfg.seed`.
pub fn train_policy(scene: &Scene, spec: &Formula, cfg: &SynthesisConfig) -> Result<QTable, SynthesisError> {
    cfg.validate()?;
    let plans = plan_conjuncts(spec, scene, &cfg.t_star, cfg.gamma_inf_fraction)?;
    train_with_plans(scene, spec, &plans, cfg, cfg.episodes)
}

/// Follow the greedy policy from `pose` at time `t` up to `horizon`,
/// appending each successor to `out`. `monitor` must already contain `pose`
/// and is advanced alongside.
pub fn follow_policy(
    q: &QTable,
    scene: &Scene,
    monitor: &mut Monitor,
    mut pose: Pose,
    t: usize,
    horizon: usize,
    out: &mut Vec<Pose>,
) {
    for tau in t..horizon {
        let a = policy_action(q, &pose, tau, monitor.status());
        pose = step(&pose, a, scene);
        monitor.push(&pose, scene);
        out.push(pose);
    }
}

/// Greedy rollout from the scene start over `0..=horizon(spec)`.
pub fn greedy_rollout(q: &QTable, scene: &Scene, spec: &Formula) -> Result<Vec<Pose>, SynthesisError> {
    let horizon = check_spec(spec)?;
    let start = scene.start();
    let mut monitor = Monitor::new(spec)?;
    monitor.push(&start, scene);
    let mut trace = Vec::with_capacity(horizon + 1);
    trace.push(start);
    follow_policy(q, scene, &mut monitor, start, 0, horizon, &mut trace);
    Ok(trace)
}

/// Train, then check that the greedy rollout from the start satisfies the
/// formula. Failing attempts are retried with twice the episodes, up
/// to `cfg.max_attempts` attempts.
pub fn synthesize(scene: &Scene, spec: &Formula, cfg: &SynthesisConfig) -> Result<Synthesis, SynthesisError> {
    cfg.validate()?;
    let horizon = check_spec(spec)?;
    let plans = plan_conjuncts(spec, scene, &cfg.t_star, cfg.gamma_inf_fraction)?;
    let mut episodes = cfg.episodes;
    let mut last = f64::NEG_INFINITY;
    for attempt in 1..=cfg.max_attempts {
        let q = train_with_plans(scene, spec, &plans, cfg, episodes)?;
        let trace = greedy_rollout(&q, scene, spec)?;
        last = robustness(&trace, spec, 0, scene)?;
        if last > 0.0 {
            let report = SynthesisReport {
                gate_passed: true,
                attempts: attempt,
                episodes,
                horizon,
                rollout_robustness: last,
                states: q.len(),
                plans,
            };
            return Ok(Synthesis { q, report });
        }
        if attempt < cfg.max_attempts {
            episodes *= 2;
        }
    }
    Err(SynthesisError::GateFailed {
        attempts: cfg.max_attempts,
        episodes,
        robustness: last,
    })
}

/// Verdict of the greedy rollout from the start; used by diagnostics.
pub fn rollout_verdict(q: &QTable, scene: &Scene, spec: &Formula) -> Result<Verdict, SynthesisError> {
    let trace = greedy_rollout(q, scene, spec)?;
    Ok(crate::stl::prefix_verdict(&trace, spec, scene)?)
}
