//! Runtime specification shield for categorical action policies.
//!
//! A specification-oblivious action distribution (the "foundation model",
//! here a goal-seeking surrogate) is projected at every decision step onto
//! the set of distributions whose support only contains actions that still
//! admit a satisfying continuation of a Signal Temporal Logic formula. The
//! continuation is predicted by rolling out a time-indexed policy that was
//! synthesized offline with funnel-shaped rewards and tabular Q-learning.
//!
//! Module map:
//!
//! * [`stl`]: formula AST, DSL parser, robustness, incremental prefix monitor.
//! * [`world`]: occupancy grid, poses, discrete unicycle dynamics, regions.
//! * [`synthesis`]: funnel schedules, shaped rewards, Q-learning, greedy policy.
//! * [`shield`]: rollout feasibility and the closed-form KL projection.
//! * [`surrogate`]: the goal-seeking stand-in for the foundation model.
//! * [`runtime`]: the shielded episode loop and the unmodified baseline.
//! * [`harness`]: experiment configs, Monte-Carlo batches, CSV and SVG output.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod harness;
pub mod runtime;
pub mod scalar;
pub mod shield;
pub mod stl;
pub mod surrogate;
pub mod synthesis;
pub mod world;

pub use scalar::Scalar;
pub use shield::{ActionDistribution, FeasibilityVector};
pub use stl::{Formula, Interval, NonTemporal, Predicate, Verdict};
pub use world::{Action, OccupancyMap, Pose, Region, Scene};

/// Action distribution over the fixed four-action set, in double precision.
pub type Distribution = ActionDistribution<f64>;
/// Single-precision action distribution.
pub type Distribution32 = ActionDistribution<f32>;
/// Funnel schedule in double precision.
pub type Funnel = synthesis::FunnelParams<f64>;
/// Funnel schedule in single precision.
pub type Funnel32 = synthesis::FunnelParams<f32>;
