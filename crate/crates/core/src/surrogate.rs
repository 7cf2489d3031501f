//! Goal-seeking stand-in for the foundation model.
//!
//! Actions are scored by the negated cost-to-go of the position they lead to
//! and turned into a distribution by a temperature softmax. The model sees the
//! scene, the pose and the instruction, never the temporal formula.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::shield::ActionDistribution;
use crate::world::{shortest_path_costs, step, Action, Pose, Scene, WorldError};

/// End score away from the goal, relative to the best movement score.
const FAR_FROM_GOAL: f64 = -1e3;
/// Score penalty of a forward move into an obstacle.
const BLOCKED: f64 = 1.0;
/// Score cost of each rotation beyond the first.
const TURN: f64 = 0.1;

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("invalid surrogate configuration: {0}")]
    Config(String),
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Task instruction: the region to reach and a display label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instruction {
    pub goal_region: String,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    pub temperature: f64,
    /// End becomes attractive within this distance of the goal region.
    pub goal_radius: f64,
    /// End score above the best movement score near the goal. A very negative
    /// value suppresses End entirely.
    pub end_bonus: f64,
    pub noise_seed: u64,
    /// Amplitude of fixed per-(cell, heading, action) score perturbations.
    pub noise_scale: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            temperature: 0.5,
            goal_radius: 0.25,
            end_bonus: 5.0,
            noise_seed: 0,
            noise_scale: 0.0,
        }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<(), SurrogateError> {
        if !(self.temperature > 0.0) {
            return Err(SurrogateError::Config("temperature must be positive".into()));
        }
        if !(self.goal_radius > 0.0) {
            return Err(SurrogateError::Config("goal_radius must be positive".into()));
        }
        if !(self.noise_scale >= 0.0) || !self.end_bonus.is_finite() {
            return Err(SurrogateError::Config(
                "noise_scale must be non-negative and end_bonus finite".into(),
            ));
        }
        Ok(())
    }
}

/// Surrogate with the cost field and noise table precomputed for one
/// (scene, instruction) pair. Immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct SurrogateModel {
    scene: Scene,
    instr: Instruction,
    cfg: SurrogateConfig,
    /// Cost-to-go at each cell center, with unreachable cells filled in.
    cost: Vec<f64>,
    noise: Vec<f64>,
}

impl SurrogateModel {
    pub fn new(scene: &Scene, instr: &Instruction, cfg: &SurrogateConfig) -> Result<Self, SurrogateError> {
        cfg.validate()?;
        let goal = scene
            .region(&instr.goal_region)
            .ok_or_else(|| WorldError::UnknownRegion(instr.goal_region.clone()))?;
        let map = scene.map();
        let field = shortest_path_costs(map, goal, scene.footprint_radius())?;
        let unreachable = f64::from(field.max_finite()) + 10.0;
        let (w, h) = (map.width(), map.height());
        let cost = (0..map.cell_count())
            .map(|i| match field.get(i) {
                Some(c) => f64::from(c),
                None => {
                    let (c, r) = map.cell_coords(i);
                    let mut best = None::<u32>;
                    let mut see = |cc: usize, rr: usize| {
                        if let Some(v) = field.get_xy(cc, rr) {
                            best = Some(best.map_or(v, |b| b.min(v)));
                        }
                    };
                    if c > 0 {
                        see(c - 1, r);
                    }
                    if c + 1 < w {
                        see(c + 1, r);
                    }
                    if r > 0 {
                        see(c, r - 1);
                    }
                    if r + 1 < h {
                        see(c, r + 1);
                    }
                    best.map_or(unreachable, |b| f64::from(b) + 1.0)
                }
            })
            .collect();
        let slots = map.cell_count() * usize::from(scene.heading_count()) * Action::COUNT;
        let noise = if cfg.noise_scale > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.noise_seed);
            (0..slots)
                .map(|_| cfg.noise_scale * rng.gen_range(-1.0..=1.0))
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            scene: scene.clone(),
            instr: instr.clone(),
            cfg: cfg.clone(),
            cost,
            noise,
        })
    }

    pub fn config(&self) -> &SurrogateConfig {
        &self.cfg
    }

    pub fn instruction(&self) -> &Instruction {
        &self.instr
    }

    /// Cost-to-go at a position, bilinear between cell centers.
    pub fn cost_at(&self, x: f64, y: f64) -> f64 {
        let map = self.scene.map();
        let res = map.resolution();
        let (w, h) = (map.width(), map.height());
        let fx = (x / res - 0.5).clamp(0.0, (w - 1) as f64);
        let fy = (y / res - 0.5).clamp(0.0, (h - 1) as f64);
        let (c0, r0) = (fx.floor() as usize, fy.floor() as usize);
        let (c1, r1) = ((c0 + 1).min(w - 1), (r0 + 1).min(h - 1));
        let (tx, ty) = (fx - c0 as f64, fy - r0 as f64);
        let at = |c: usize, r: usize| self.cost[r * w + c];
        let bottom = at(c0, r0) * (1.0 - tx) + at(c1, r0) * tx;
        let top = at(c0, r1) * (1.0 - tx) + at(c1, r1) * tx;
        bottom * (1.0 - ty) + top * ty
    }

    fn noise(&self, pose: &Pose, a: Action) -> f64 {
        if self.noise.is_empty() {
            return 0.0;
        }
        let map = self.scene.map();
        let cell = map.cell_of(pose.position()).unwrap_or(0);
        let hc = usize::from(self.scene.heading_count());
        self.noise[(cell * hc + usize::from(pose.heading)) * Action::COUNT + a.index()]
    }

    /// Unnormalized action scores.
    ///
    /// MoveAhead scores the cost-to-go where it lands, with a penalty when
    /// blocked. A rotation scores the best forward lookahead reachable by
    /// continuing to turn in its direction, less a small cost per extra turn.
    pub fn scores(&self, pose: &Pose) -> [f64; 4] {
        let s = &self.scene;
        let n = s.heading_count();
        let here = -self.cost_at(pose.x, pose.y);
        let ahead = |heading: u16| {
            let p = Pose { heading, ..*pose };
            let next = step(&p, Action::MoveAhead, s);
            if next == p {
                here - BLOCKED
            } else {
                -self.cost_at(next.x, next.y)
            }
        };
        let turn = |left: bool| {
            (1..=(n / 2).max(1))
                .map(|k| {
                    let h = if left {
                        (pose.heading + n - k % n) % n
                    } else {
                        (pose.heading + k) % n
                    };
                    ahead(h) - TURN * f64::from(k - 1)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let mut scores = [ahead(pose.heading), turn(true), turn(false), 0.0];
        let best = scores[..3].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        scores[3] = if self.near_goal(pose) {
            best + self.cfg.end_bonus
        } else {
            best + FAR_FROM_GOAL
        };
        for a in Action::ALL {
            scores[a.index()] += self.noise(pose, a);
        }
        scores
    }

    /// Whether `pose` is within `goal_radius` of the instruction's goal region.
    pub fn near_goal(&self, pose: &Pose) -> bool {
        let goal = self
            .scene
            .region(&self.instr.goal_region)
            .expect("goal region checked at construction");
        goal.signed_distance(pose.position()) >= -self.cfg.goal_radius
    }

    /// `pi_FM(. | pose)`.
    pub fn distribution(&self, pose: &Pose) -> ActionDistribution<f64> {
        ActionDistribution::softmax(self.scores(pose), self.cfg.temperature)
    }
}

/// One-shot form of [`SurrogateModel::distribution`].
pub fn fm_distribution(
    scene: &Scene,
    pose: &Pose,
    instr: &Instruction,
    cfg: &SurrogateConfig,
) -> Result<ActionDistribution<f64>, SurrogateError> {
    Ok(SurrogateModel::new(scene, instr, cfg)?.distribution(pose))
}
