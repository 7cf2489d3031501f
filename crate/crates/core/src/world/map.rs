use std::collections::VecDeque;

use super::geometry::{Rect, Region};
use super::WorldError;

/// Boolean occupancy grid. Cell `(col, row)` covers
/// `[col * res, (col + 1) * res] x [row * res, (row + 1) * res]`, with row 0
/// at the bottom of the map.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMap {
    width: usize,
    height: usize,
    resolution: f64,
    occupied: Vec<bool>,
}

impl OccupancyMap {
    pub fn new(width: usize, height: usize, resolution: f64) -> Result<Self, WorldError> {
        if width == 0 || height == 0 {
            return Err(WorldError::Validation("map must have at least one cell".into()));
        }
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(WorldError::Validation("resolution must be positive".into()));
        }
        Ok(Self {
            width,
            height,
            resolution,
            occupied: vec![false; width * height],
        })
    }

    /// Build from text rows, top row first; `#` is occupied, `.` free.
    pub fn from_rows<S: AsRef<str>>(rows: &[S], resolution: f64) -> Result<Self, WorldError> {
        let height = rows.len();
        let width = rows.first().map(|r| r.as_ref().chars().count()).unwrap_or(0);
        let mut map = Self::new(width, height, resolution)?;
        for (k, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.chars().count() != width {
                return Err(WorldError::Validation(format!(
                    "grid row {k} has length {} (expected {width})",
                    row.chars().count()
                )));
            }
            let y = height - 1 - k;
            for (x, c) in row.chars().enumerate() {
                match c {
                    '#' => map.set_occupied(x, y, true),
                    '.' => {}
                    other => {
                        return Err(WorldError::Validation(format!(
                            "grid row {k}: unexpected cell character '{other}'"
                        )))
                    }
                }
            }
        }
        Ok(map)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn extent(&self) -> (f64, f64) {
        (
            self.width as f64 * self.resolution,
            self.height as f64 * self.resolution,
        )
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn set_occupied(&mut self, col: usize, row: usize, occ: bool) {
        let i = row * self.width + col;
        self.occupied[i] = occ;
    }

    #[inline]
    pub fn is_occupied(&self, col: usize, row: usize) -> bool {
        self.occupied[row * self.width + col]
    }

    /// Flat index of the cell containing `p`, if inside the map.
    pub fn cell_of(&self, p: (f64, f64)) -> Option<usize> {
        let cx = (p.0 / self.resolution).floor();
        let cy = (p.1 / self.resolution).floor();
        if cx < 0.0 || cy < 0.0 {
            return None;
        }
        let (cx, cy) = (cx as usize, cy as usize);
        (cx < self.width && cy < self.height).then_some(cy * self.width + cx)
    }

    pub fn cell_coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    pub fn cell_center(&self, index: usize) -> (f64, f64) {
        let (c, r) = self.cell_coords(index);
        ((c as f64 + 0.5) * self.resolution, (r as f64 + 0.5) * self.resolution)
    }

    pub fn cell_rect(&self, col: usize, row: usize) -> Rect {
        let res = self.resolution;
        Rect {
            min: (col as f64 * res, row as f64 * res),
            max: ((col + 1) as f64 * res, (row + 1) as f64 * res),
        }
    }

    fn within_bounds(&self, lo: (f64, f64), hi: (f64, f64)) -> bool {
        let (w, h) = self.extent();
        lo.0 >= 0.0 && lo.1 >= 0.0 && hi.0 <= w && hi.1 <= h
    }

    /// Occupied cells overlapping the axis-aligned box `[lo, hi]`.
    fn occupied_in(&self, lo: (f64, f64), hi: (f64, f64)) -> impl Iterator<Item = (usize, usize)> + '_ {
        let res = self.resolution;
        let c0 = (lo.0 / res).floor().max(0.0) as usize;
        let r0 = (lo.1 / res).floor().max(0.0) as usize;
        let c1 = ((hi.0 / res).floor() as usize).min(self.width - 1);
        let r1 = ((hi.1 / res).floor() as usize).min(self.height - 1);
        (r0..=r1)
            .flat_map(move |r| (c0..=c1).map(move |c| (c, r)))
            .filter(|&(c, r)| self.is_occupied(c, r))
    }

    /// True iff the disk of `radius` at `p` lies inside the map and overlaps
    /// no occupied cell. Touching a cell boundary is not overlap.
    pub fn is_free(&self, p: (f64, f64), radius: f64) -> bool {
        let lo = (p.0 - radius, p.1 - radius);
        let hi = (p.0 + radius, p.1 + radius);
        if !self.within_bounds(lo, hi) {
            return false;
        }
        if self.cell_of(p).is_some_and(|i| self.occupied[i]) {
            return false;
        }
        self.occupied_in(lo, hi)
            .all(|(c, r)| self.cell_rect(c, r).distance(p) >= radius)
    }

    /// True iff the disk swept from `a` to `b` stays free.
    pub fn is_free_sweep(&self, a: (f64, f64), b: (f64, f64), radius: f64) -> bool {
        if !self.is_free(b, radius) {
            return false;
        }
        let lo = (a.0.min(b.0) - radius, a.1.min(b.1) - radius);
        let hi = (a.0.max(b.0) + radius, a.1.max(b.1) + radius);
        if !self.within_bounds(lo, hi) {
            return false;
        }
        self.occupied_in(lo, hi)
            .all(|(c, r)| self.cell_rect(c, r).segment_distance(a, b) >= radius)
    }

    /// Cells whose center is collision-free for the footprint.
    pub fn traversable(&self, radius: f64) -> Vec<bool> {
        (0..self.cell_count())
            .map(|i| self.is_free(self.cell_center(i), radius))
            .collect()
    }
}

/// Hop-count distance to the nearest goal cell over traversable cells
/// (4-connected); `None` where unreachable.
#[derive(Debug, Clone, PartialEq)]
pub struct CostField {
    width: usize,
    costs: Vec<Option<u32>>,
}

impl CostField {
    pub fn get(&self, cell: usize) -> Option<u32> {
        self.costs.get(cell).copied().flatten()
    }

    pub fn get_xy(&self, col: usize, row: usize) -> Option<u32> {
        self.get(row * self.width + col)
    }

    pub fn max_finite(&self) -> u32 {
        self.costs.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn as_slice(&self) -> &[Option<u32>] {
        &self.costs
    }
}

/// Breadth-first wavefront from every traversable cell overlapping `goal`.
pub fn shortest_path_costs(map: &OccupancyMap, goal: &Region, radius: f64) -> Result<CostField, WorldError> {
    let free = map.traversable(radius);
    let mut costs = vec![None; map.cell_count()];
    let mut queue = VecDeque::new();
    for (i, &ok) in free.iter().enumerate() {
        let (c, r) = map.cell_coords(i);
        if ok && goal.intersects_rect(&map.cell_rect(c, r)) {
            costs[i] = Some(0);
            queue.push_back(i);
        }
    }
    if queue.is_empty() {
        return Err(WorldError::NoFreeGoalCell(goal.name.clone()));
    }
    let (w, h) = (map.width(), map.height());
    while let Some(i) = queue.pop_front() {
        let d = costs[i].expect("queued cells have a cost");
        let (c, r) = map.cell_coords(i);
        let mut visit = |j: usize| {
            if free[j] && costs[j].is_none() {
                costs[j] = Some(d + 1);
                queue.push_back(j);
            }
        };
        if c > 0 {
            visit(i - 1);
        }
        if c + 1 < w {
            visit(i + 1);
        }
        if r > 0 {
            visit(i - w);
        }
        if r + 1 < h {
            visit(i + w);
        }
    }
    Ok(CostField { width: w, costs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn walled() -> OccupancyMap {
        OccupancyMap::from_rows(
            &[
                "##########",
                "#........#",
                "#........#",
                "#........#",
                "#........#",
                "##########",
            ],
            0.25,
        )
        .unwrap()
    }

    #[test]
    fn open_space_is_free() {
        let m = walled();
        assert!(m.is_free((1.25, 0.75), 0.25));
    }

    #[test]
    fn overlap_with_occupied_cell() {
        let m = walled();
        // wall cells occupy x < 0.25; a disk centered at 0.4 reaches 0.15
        assert!(!m.is_free((0.4, 0.75), 0.25));
        assert!(m.is_free((0.5, 0.75), 0.25));
    }

    #[test]
    fn near_occupied_border_is_blocked() {
        let m = walled();
        assert!(!m.is_free((1.25, 0.45), 0.25));
    }

    #[test]
    fn outside_map_is_not_free() {
        let m = OccupancyMap::from_rows(&["....", "...."], 0.25).unwrap();
        assert!(!m.is_free((0.1, 0.25), 0.25));
        assert!(m.is_free((0.25, 0.25), 0.25));
        assert!(!m.is_free((-1.0, 0.25), 0.25));
    }

    #[test]
    fn sweep_detects_thin_wall() {
        let m = OccupancyMap::from_rows(&["..........", "....#.....", "....#.....", "....#....."], 0.25).unwrap();
        // both endpoints free of the wall at column 4, but the sweep crosses it
        let (a, b) = ((0.5, 0.5), (2.0, 0.5));
        assert!(m.is_free(a, 0.2) && m.is_free(b, 0.2));
        assert!(!m.is_free_sweep(a, b, 0.2));
    }

    #[test]
    fn bfs_costs() {
        let m = OccupancyMap::from_rows(
            &[
                "..........",
                "..........",
                ".....#....",
                ".....#....",
                ".....#....",
                "......#...",
            ],
            1.0,
        )
        .unwrap();
        let goal = Region::rect("g", (0.0, 0.0), (1.0, 1.0));
        let cost = shortest_path_costs(&m, &goal, 0.0).unwrap();
        assert_eq!(cost.get_xy(0, 0), Some(0));
        assert_eq!(cost.get_xy(1, 0), Some(1));
        assert_eq!(cost.get_xy(0, 1), Some(1));
        // row 0 is blocked at column 6; rows 1..=3 at column 5
        assert_eq!(cost.get_xy(6, 0), None);
        assert_eq!(cost.get_xy(7, 0), Some(15));
    }

    #[test]
    fn cell_behind_full_wall_is_unreachable() {
        let m = OccupancyMap::from_rows(&["..#..", "..#..", "..#.."], 1.0).unwrap();
        let goal = Region::rect("g", (0.0, 0.0), (1.0, 1.0));
        let cost = shortest_path_costs(&m, &goal, 0.0).unwrap();
        assert_eq!(cost.get_xy(4, 1), None);
        assert_eq!(cost.get_xy(1, 2), Some(3));
    }

    #[test]
    fn goal_inside_wall_has_no_free_cell() {
        let m = OccupancyMap::from_rows(&["##..", "##.."], 1.0).unwrap();
        let goal = Region::rect("g", (0.1, 0.1), (0.9, 0.9));
        assert!(matches!(
            shortest_path_costs(&m, &goal, 0.0),
            Err(WorldError::NoFreeGoalCell(_))
        ));
    }
}
