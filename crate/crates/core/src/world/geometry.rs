use serde::{Deserialize, Serialize};

/// Axis-aligned rectangle `[min.0, max.0] x [min.1, max.1]` in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: (f64, f64),
    pub max: (f64, f64),
}

impl Rect {
    /// Euclidean distance from a point to the rectangle; zero inside.
    pub fn distance(&self, p: (f64, f64)) -> f64 {
        let dx = (self.min.0 - p.0).max(0.0).max(p.0 - self.max.0);
        let dy = (self.min.1 - p.1).max(0.0).max(p.1 - self.max.1);
        dx.hypot(dy)
    }

    fn contains(&self, p: (f64, f64)) -> bool {
        self.min.0 <= p.0 && p.0 <= self.max.0 && self.min.1 <= p.1 && p.1 <= self.max.1
    }

    fn corners(&self) -> [(f64, f64); 4] {
        [self.min, (self.max.0, self.min.1), self.max, (self.min.0, self.max.1)]
    }

    /// Distance between the segment `a -> b` and the rectangle.
    pub fn segment_distance(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        if self.contains(a) || self.contains(b) {
            return 0.0;
        }
        let c = self.corners();
        for i in 0..4 {
            if segments_intersect(a, b, c[i], c[(i + 1) % 4]) {
                return 0.0;
            }
        }
        let ends = self.distance(a).min(self.distance(b));
        c.iter().map(|&q| point_segment_distance(q, a, b)).fold(ends, f64::min)
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn segments_intersect(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

pub fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let s = if len2 > 0.0 {
        (((p.0 - a.0) * vx + (p.1 - a.1) * vy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - (a.0 + s * vx)).hypot(p.1 - (a.1 + s * vy))
}

/// Region geometry in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    Circle { center: [f64; 2], radius: f64 },
    Rect { min: [f64; 2], max: [f64; 2] },
}

/// Named region of the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    #[serde(flatten)]
    pub shape: Shape,
}

impl Region {
    pub fn circle(name: impl Into<String>, center: (f64, f64), radius: f64) -> Self {
        Self {
            name: name.into(),
            shape: Shape::Circle {
                center: [center.0, center.1],
                radius,
            },
        }
    }

    pub fn rect(name: impl Into<String>, min: (f64, f64), max: (f64, f64)) -> Self {
        Self {
            name: name.into(),
            shape: Shape::Rect {
                min: [min.0, min.1],
                max: [max.0, max.1],
            },
        }
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    pub fn signed_distance(&self, p: (f64, f64)) -> f64 {
        match self.shape {
            Shape::Circle { center, radius } => radius - (p.0 - center[0]).hypot(p.1 - center[1]),
            Shape::Rect { min, max } => {
                let cx = 0.5 * (min[0] + max[0]);
                let cy = 0.5 * (min[1] + max[1]);
                let dx = (p.0 - cx).abs() - 0.5 * (max[0] - min[0]);
                let dy = (p.1 - cy).abs() - 0.5 * (max[1] - min[1]);
                let outside = dx.max(0.0).hypot(dy.max(0.0));
                let inside = dx.max(dy).min(0.0);
                -(outside + inside)
            }
        }
    }

    /// True when the region and the rectangle share interior points.
    pub fn intersects_rect(&self, r: &Rect) -> bool {
        match self.shape {
            Shape::Circle { center, radius } => r.distance((center[0], center[1])) < radius,
            Shape::Rect { min, max } => min[0] < r.max.0 && r.min.0 < max[0] && min[1] < r.max.1 && r.min.1 < max[1],
        }
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self.shape {
            Shape::Circle { center, radius } => {
                if !finite(&center) || !radius.is_finite() || radius <= 0.0 {
                    return Err(format!("region '{}': radius must be positive", self.name));
                }
            }
            Shape::Rect { min, max } => {
                if !finite(&min) || !finite(&max) || min[0] >= max[0] || min[1] >= max[1] {
                    return Err(format!("region '{}': min must be below max", self.name));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn circle_signed_distance() {
        let c = Region::circle("c", (1.0, 1.0), 1.5);
        assert_eq!(c.signed_distance((1.0, 1.0)), 1.5);
        assert_abs_diff_eq!(c.signed_distance((3.0, 1.0)), -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c.signed_distance((2.5, 1.0)), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rect_signed_distance() {
        let r = Region::rect("r", (0.0, 0.0), (2.0, 1.0));
        assert_eq!(r.signed_distance((2.0, 1.0)), 0.0);
        assert_eq!(r.signed_distance((0.0, 0.0)), 0.0);
        assert_eq!(r.signed_distance((1.0, 0.5)), 0.5);
        assert_eq!(r.signed_distance((1.0, 0.25)), 0.25);
        assert_eq!(r.signed_distance((3.0, 0.5)), -1.0);
        assert_abs_diff_eq!(r.signed_distance((5.0, 5.0)), -5.0, epsilon = 1e-12);
    }

    #[test]
    fn segment_rect_distance() {
        let r = Rect {
            min: (1.0, 1.0),
            max: (2.0, 2.0),
        };
        // crosses the box
        assert_eq!(r.segment_distance((0.0, 1.5), (3.0, 1.5)), 0.0);
        // passes below
        assert_abs_diff_eq!(r.segment_distance((0.0, 0.5), (3.0, 0.5)), 0.5, epsilon = 1e-12);
        // diagonal near a corner
        assert_abs_diff_eq!(
            r.segment_distance((0.0, 1.0), (1.0, 0.0)),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn region_json_shape() {
        let r: Region = serde_json::from_str(r#"{"name":"c","shape":"circle","center":[1,2],"radius":0.5}"#).unwrap();
        assert_eq!(r, Region::circle("c", (1.0, 2.0), 0.5));
        let q: Region = serde_json::from_str(r#"{"name":"q","shape":"rect","min":[0,0],"max":[1,2]}"#).unwrap();
        assert_eq!(q, Region::rect("q", (0.0, 0.0), (1.0, 2.0)));
    }
}
