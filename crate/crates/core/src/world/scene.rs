use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::geometry::{Region, Shape};
use super::map::OccupancyMap;
use super::{Action, Pose, WorldError};
use crate::stl::{Formula, PredicateEval};

const DEFAULT_FOOTPRINT: f64 = 0.25;
const DEFAULT_STEP: f64 = 0.25;
const DEFAULT_HEADINGS: u16 = 12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapFile {
    pub resolution: f64,
    pub grid: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartFile {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub heading: u16,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegionFile {
    name: String,
    shape: String,
    #[serde(default)]
    center: Option<[f64; 2]>,
    #[serde(default)]
    radius: Option<f64>,
    #[serde(default)]
    min: Option<[f64; 2]>,
    #[serde(default)]
    max: Option<[f64; 2]>,
}

impl RegionFile {
    fn into_region(self) -> Result<Region, WorldError> {
        let missing = |what: &str| WorldError::Validation(format!("region '{}' is missing '{what}'", self.name));
        let shape = match self.shape.as_str() {
            "circle" => Shape::Circle {
                center: self.center.ok_or_else(|| missing("center"))?,
                radius: self.radius.ok_or_else(|| missing("radius"))?,
            },
            "rect" => Shape::Rect {
                min: self.min.ok_or_else(|| missing("min"))?,
                max: self.max.ok_or_else(|| missing("max"))?,
            },
            other => {
                return Err(WorldError::Validation(format!(
                    "region '{}': unknown shape kind '{other}'",
                    self.name
                )))
            }
        };
        let region = Region { name: self.name, shape };
        region.validate().map_err(WorldError::Validation)?;
        Ok(region)
    }

    fn from_region(r: &Region) -> Self {
        let mut f = RegionFile {
            name: r.name.clone(),
            shape: String::new(),
            center: None,
            radius: None,
            min: None,
            max: None,
        };
        match r.shape {
            Shape::Circle { center, radius } => {
                f.shape = "circle".into();
                f.center = Some(center);
                f.radius = Some(radius);
            }
            Shape::Rect { min, max } => {
                f.shape = "rect".into();
                f.min = Some(min);
                f.max = Some(max);
            }
        }
        f
    }
}

/// On-disk scene description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneFile {
    pub map: MapFile,
    regions: Vec<RegionFile>,
    pub start: StartFile,
    pub goal_region: String,
    #[serde(default = "default_footprint")]
    pub footprint_radius: f64,
    #[serde(default = "default_step")]
    pub step_length: f64,
    #[serde(default = "default_headings")]
    pub heading_count: u16,
}

fn default_footprint() -> f64 {
    DEFAULT_FOOTPRINT
}
fn default_step() -> f64 {
    DEFAULT_STEP
}
fn default_headings() -> u16 {
    DEFAULT_HEADINGS
}

/// Validated, immutable scene.
#[derive(Debug, Clone)]
pub struct Scene {
    map: OccupancyMap,
    grid: Vec<String>,
    regions: Vec<Region>,
    start: Pose,
    goal: usize,
    footprint_radius: f64,
    step_length: f64,
    heading_count: u16,
    directions: Vec<(f64, f64)>,
}

fn snap(v: f64) -> f64 {
    if v.abs() < 1e-12 {
        0.0
    } else {
        v
    }
}

impl Scene {
    pub fn from_file(file: SceneFile) -> Result<Self, WorldError> {
        let map = OccupancyMap::from_rows(&file.map.grid, file.map.resolution)?;
        let mut names = HashSet::new();
        let mut regions = Vec::with_capacity(file.regions.len());
        for rf in file.regions {
            if !names.insert(rf.name.clone()) {
                return Err(WorldError::Validation(format!("duplicate region name '{}'", rf.name)));
            }
            regions.push(rf.into_region()?);
        }
        let goal = regions
            .iter()
            .position(|r| r.name == file.goal_region)
            .ok_or_else(|| WorldError::Validation(format!("goal region '{}' is not defined", file.goal_region)))?;
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(file.footprint_radius) {
            return Err(WorldError::Validation("footprint_radius must be positive".into()));
        }
        if !positive(file.step_length) {
            return Err(WorldError::Validation("step_length must be positive".into()));
        }
        if file.heading_count == 0 {
            return Err(WorldError::Validation("heading_count must be at least 1".into()));
        }
        if file.start.heading >= file.heading_count {
            return Err(WorldError::Validation(format!(
                "start heading {} out of range 0..{}",
                file.start.heading, file.heading_count
            )));
        }
        let start = Pose::new(file.start.x, file.start.y, file.start.heading);
        if !map.is_free(start.position(), file.footprint_radius) {
            return Err(WorldError::Validation(format!(
                "start ({}, {}) is in collision",
                start.x, start.y
            )));
        }
        let directions = (0..file.heading_count)
            .map(|k| {
                let theta = std::f64::consts::TAU * f64::from(k) / f64::from(file.heading_count);
                (snap(theta.cos()), snap(-theta.sin()))
            })
            .collect();
        Ok(Self {
            map,
            grid: file.map.grid,
            regions,
            start,
            goal,
            footprint_radius: file.footprint_radius,
            step_length: file.step_length,
            heading_count: file.heading_count,
            directions,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        let file: SceneFile = serde_json::from_str(text).map_err(|e| WorldError::Parse(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn to_file(&self) -> SceneFile {
        SceneFile {
            map: MapFile {
                resolution: self.map.resolution(),
                grid: self.grid.clone(),
            },
            regions: self.regions.iter().map(RegionFile::from_region).collect(),
            start: StartFile {
                x: self.start.x,
                y: self.start.y,
                heading: self.start.heading,
            },
            goal_region: self.goal().name.clone(),
            footprint_radius: self.footprint_radius,
            step_length: self.step_length,
            heading_count: self.heading_count,
        }
    }

    #[inline]
    pub fn map(&self) -> &OccupancyMap {
        &self.map
    }

    #[inline]
    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, name: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.name == name)
    }

    #[inline]
    pub fn start(&self) -> Pose {
        self.start
    }

    #[inline]
    pub fn goal(&self) -> &Region {
        &self.regions[self.goal]
    }

    #[inline]
    pub fn footprint_radius(&self) -> f64 {
        self.footprint_radius
    }

    #[inline]
    pub fn step_length(&self) -> f64 {
        self.step_length
    }

    #[inline]
    pub fn heading_count(&self) -> u16 {
        self.heading_count
    }

    /// Unit vector of heading `k`.
    #[inline]
    pub fn direction(&self, heading: u16) -> (f64, f64) {
        self.directions[usize::from(heading)]
    }

    /// A copy of this scene with a different start pose.
    pub fn with_start(&self, start: Pose) -> Result<Self, WorldError> {
        if start.heading >= self.heading_count || !self.is_valid(&start) {
            return Err(WorldError::Validation("start pose is not collision-free".into()));
        }
        let mut s = self.clone();
        s.start = start;
        Ok(s)
    }

    /// Pose is in bounds, collision-free and has a legal heading.
    pub fn is_valid(&self, pose: &Pose) -> bool {
        pose.heading < self.heading_count && self.map.is_free(pose.position(), self.footprint_radius)
    }

    /// Every predicate of `f` names a region of this scene.
    pub fn check_formula(&self, f: &Formula) -> Result<(), WorldError> {
        let mut missing = None;
        f.for_each_predicate(&mut |p| {
            if missing.is_none() && self.region(&p.region).is_none() {
                missing = Some(p.region.clone());
            }
        });
        match missing {
            Some(name) => Err(WorldError::UnknownRegion(name)),
            None => Ok(()),
        }
    }
}

impl PredicateEval<Pose, f64> for Scene {
    fn signed_value(&self, state: &Pose, region: &str) -> f64 {
        match self.region(region) {
            Some(r) => r.signed_distance(state.position()),
            // unknown names are rejected by check_formula; treat as far away
            None => f64::NEG_INFINITY,
        }
    }
}

/// Read and validate a scene JSON file.
pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene, WorldError> {
    let text = std::fs::read_to_string(path)?;
    Scene::from_json(&text)
}

/// Signed distance from the pose position to the region boundary.
pub fn signed_distance(pose: &Pose, r: &Region) -> f64 {
    r.signed_distance(pose.position())
}

/// Deterministic transition. Blocked forward moves leave the pose unchanged.
pub fn step(pose: &Pose, a: Action, scene: &Scene) -> Pose {
    let n = scene.heading_count;
    match a {
        Action::MoveAhead => {
            let (dx, dy) = scene.direction(pose.heading);
            let s = scene.step_length;
            let next = (pose.x + s * dx, pose.y + s * dy);
            let r = scene.footprint_radius;
            let free = if s > 2.0 * r {
                scene.map.is_free_sweep(pose.position(), next, r)
            } else {
                scene.map.is_free(next, r)
            };
            if free {
                Pose::new(next.0, next.1, pose.heading)
            } else {
                *pose
            }
        }
        Action::RotateLeft => Pose::new(pose.x, pose.y, (pose.heading + n - 1) % n),
        Action::RotateRight => Pose::new(pose.x, pose.y, (pose.heading + 1) % n),
        Action::End => *pose,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r##"{
        "map": {"resolution": 0.25, "grid": ["......", "......", "......", "......"]},
        "regions": [{"name": "goal", "shape": "circle", "center": [1.0, 0.5], "radius": 0.3}],
        "start": {"x": 0.5, "y": 0.5, "heading": 0},
        "goal_region": "goal"
    }"##;

    fn corridor() -> Scene {
        Scene::from_json(
            &serde_json::json!({
                "map": {"resolution": 0.25, "grid": [
                    "##########",
                    "#........#",
                    "#........#",
                    "#........#",
                    "##########"]},
                "regions": [{"name": "g", "shape": "rect", "min": [1.5, 0.25], "max": [2.25, 1.0]}],
                "start": {"x": 0.625, "y": 0.625, "heading": 0},
                "goal_region": "g"
            })
            .to_string(),
        )
        .unwrap()
    }

    #[test]
    fn minimal_scene_loads() {
        let s = Scene::from_json(MINIMAL).unwrap();
        assert_eq!(s.regions().len(), 1);
        assert_eq!(s.heading_count(), 12);
        assert_eq!(s.step_length(), 0.25);
        assert_eq!(s.goal().name, "goal");
    }

    #[test]
    fn start_in_wall_rejected() {
        let bad = MINIMAL.replace(r#""x": 0.5, "y": 0.5"#, r#""x": 0.1, "y": 0.5"#);
        assert!(matches!(Scene::from_json(&bad), Err(WorldError::Validation(_))));
    }

    #[test]
    fn unknown_shape_rejected() {
        let bad = MINIMAL.replace(r#""shape": "circle""#, r#""shape": "hexagon""#);
        assert!(matches!(Scene::from_json(&bad), Err(WorldError::Validation(_))));
    }

    #[test]
    fn duplicate_region_rejected() {
        let bad = MINIMAL.replace(
            r#""radius": 0.3}]"#,
            r#""radius": 0.3}, {"name": "goal", "shape": "circle", "center": [0.5, 0.5], "radius": 0.2}]"#,
        );
        assert!(matches!(Scene::from_json(&bad), Err(WorldError::Validation(_))));
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(Scene::from_json("{"), Err(WorldError::Parse(_))));
    }

    #[test]
    fn rotations_are_inverse() {
        let s = corridor();
        let p = s.start();
        let q = step(&step(&p, Action::RotateLeft, &s), Action::RotateRight, &s);
        assert_eq!(p, q);
    }

    #[test]
    fn full_turn_wraps() {
        let s = corridor();
        let mut p = s.start();
        for _ in 0..s.heading_count() {
            p = step(&p, Action::RotateLeft, &s);
        }
        assert_eq!(p, s.start());
    }

    #[test]
    fn move_ahead_along_x() {
        let s = corridor();
        let p = step(&s.start(), Action::MoveAhead, &s);
        assert_eq!(p.x, 0.875);
        assert_eq!(p.y, 0.625);
    }

    #[test]
    fn move_into_wall_is_noop() {
        let s = corridor();
        // heading 3 faces -y; the bottom wall is one step away
        let p = Pose::new(0.625, 0.625, 3);
        assert_eq!(step(&p, Action::MoveAhead, &s), p);
        assert_eq!(step(&p, Action::End, &s), p);
    }

    #[test]
    fn predicate_grounding() {
        let s = corridor();
        let v = s.signed_value(&Pose::new(1.875, 0.625, 0), "g");
        assert_eq!(v, 0.375);
        let f = crate::stl::parse_spec("F[0,3] nowhere").unwrap();
        assert!(matches!(s.check_formula(&f), Err(WorldError::UnknownRegion(_))));
    }
}
