//! Occupancy-grid world with discrete unicycle dynamics and named regions.

mod geometry;
mod map;
mod scene;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use geometry::{point_segment_distance, Rect, Region, Shape};
pub use map::{shortest_path_costs, CostField, OccupancyMap};
pub use scene::{load_scene, signed_distance, step, Scene, SceneFile};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("scene parse error: {0}")]
    Parse(String),
    #[error("scene validation failed: {0}")]
    Validation(String),
    #[error("goal region '{0}' overlaps no collision-free cell")]
    NoFreeGoalCell(String),
    #[error("unknown region '{0}'")]
    UnknownRegion(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Robot pose: position in meters and a discrete heading index. Heading `k`
/// points at angle `k * 360 / heading_count` degrees measured clockwise from
/// the +x axis, so heading 0 faces +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: u16,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: u16) -> Self {
        Self { x, y, heading }
    }

    #[inline]
    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

/// The fixed action set, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    MoveAhead,
    RotateLeft,
    RotateRight,
    End,
}

impl Action {
    pub const COUNT: usize = 4;
    pub const ALL: [Action; 4] = [Action::MoveAhead, Action::RotateLeft, Action::RotateRight, Action::End];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Action {
        Action::ALL[i]
    }
}
