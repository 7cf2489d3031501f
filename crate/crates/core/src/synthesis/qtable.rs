//! Time-indexed tabular action values and their binary file format.
//!
//! File layout, little-endian:
//!
//! ```text
//! magic "SSQT" | version u32 | width u32 | height u32 | resolution f64
//! | heading_count u32 | horizon u32 | conjuncts u32 | entries u64
//! | entries x (cell u32, heading u16, t u16, status u32, q[4] f64)
//! ```
//!
//! Entries are written sorted by state key so equal tables serialize to equal
//! bytes.

use std::io::{Read, Write};

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::SynthesisError;
use crate::stl::StatusMask;
use crate::world::{Action, Pose};

const MAGIC: &[u8; 4] = b"SSQT";
pub const FORMAT_VERSION: u32 = 1;

/// Discretization the table was trained on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QDims {
    pub width: u32,
    pub height: u32,
    pub resolution: f64,
    pub heading_count: u32,
    pub horizon: u32,
    pub conjuncts: u32,
}

impl QDims {
    /// Flat cell index of a position, clamped into the grid.
    #[inline]
    pub fn cell(&self, x: f64, y: f64) -> u32 {
        let cx = ((x / self.resolution).floor().max(0.0) as u32).min(self.width - 1);
        let cy = ((y / self.resolution).floor().max(0.0) as u32).min(self.height - 1);
        cy * self.width + cx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey {
    pub cell: u32,
    pub heading: u16,
    pub t: u16,
    pub status: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    dims: QDims,
    values: FxHashMap<StateKey, [f64; 4]>,
}

impl QTable {
    pub fn new(dims: QDims) -> Self {
        Self {
            dims,
            values: FxHashMap::default(),
        }
    }

    #[inline]
    pub fn dims(&self) -> &QDims {
        &self.dims
    }

    #[inline]
    pub fn key(&self, pose: &Pose, t: usize, status: StatusMask) -> StateKey {
        StateKey {
            cell: self.dims.cell(pose.x, pose.y),
            heading: pose.heading,
            t: t as u16,
            status: status.0,
        }
    }

    /// Action values; unvisited entries read as zero.
    #[inline]
    pub fn get(&self, key: &StateKey) -> [f64; 4] {
        self.values.get(key).copied().unwrap_or([0.0; 4])
    }

    #[inline]
    pub fn get_mut(&mut self, key: StateKey) -> &mut [f64; 4] {
        self.values.entry(key).or_insert([0.0; 4])
    }

    pub fn set(&mut self, key: StateKey, q: [f64; 4]) {
        self.values.insert(key, q);
    }

    /// Number of stored states.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Greedy action at a state; ties go to the earliest action in
    /// `MoveAhead, RotateLeft, RotateRight, End` order.
    #[inline]
    pub fn greedy(&self, key: &StateKey) -> Action {
        argmax_action(&self.get(key))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let d = &self.dims;
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&d.width.to_le_bytes())?;
        w.write_all(&d.height.to_le_bytes())?;
        w.write_all(&d.resolution.to_le_bytes())?;
        w.write_all(&d.heading_count.to_le_bytes())?;
        w.write_all(&d.horizon.to_le_bytes())?;
        w.write_all(&d.conjuncts.to_le_bytes())?;
        let mut keys: Vec<&StateKey> = self.values.keys().collect();
        keys.sort_unstable();
        w.write_all(&(keys.len() as u64).to_le_bytes())?;
        for k in keys {
            w.write_all(&k.cell.to_le_bytes())?;
            w.write_all(&k.heading.to_le_bytes())?;
            w.write_all(&k.t.to_le_bytes())?;
            w.write_all(&k.status.to_le_bytes())?;
            for v in &self.values[k] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(48 + self.values.len() * 44);
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, SynthesisError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(SynthesisError::Format("not a Q-table file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(SynthesisError::Format(format!(
                "unsupported Q-table format version {version}"
            )));
        }
        let dims = QDims {
            width: read_u32(&mut r)?,
            height: read_u32(&mut r)?,
            resolution: f64::from_le_bytes(read_array(&mut r)?),
            heading_count: read_u32(&mut r)?,
            horizon: read_u32(&mut r)?,
            conjuncts: read_u32(&mut r)?,
        };
        if dims.width == 0 || dims.height == 0 || !(dims.resolution > 0.0) {
            return Err(SynthesisError::Format("invalid table dimensions".into()));
        }
        let n = u64::from_le_bytes(read_array(&mut r)?);
        let mut table = QTable::new(dims);
        for _ in 0..n {
            let key = StateKey {
                cell: read_u32(&mut r)?,
                heading: u16::from_le_bytes(read_array(&mut r)?),
                t: u16::from_le_bytes(read_array(&mut r)?),
                status: read_u32(&mut r)?,
            };
            let mut q = [0.0; 4];
            for v in &mut q {
                *v = f64::from_le_bytes(read_array(&mut r)?);
            }
            table.values.insert(key, q);
        }
        Ok(table)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> std::io::Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, SynthesisError> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> std::io::Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

/// Index of the first maximum.
#[inline]
pub fn argmax_action(q: &[f64; 4]) -> Action {
    let mut best = 0;
    for i in 1..4 {
        if q[i] > q[best] {
            best = i;
        }
    }
    Action::from_index(best)
}

/// Greedy policy lookup `argmax_a Q(state, t, status, a)`.
pub fn policy_action(q: &QTable, state: &Pose, t: usize, status: StatusMask) -> Action {
    q.greedy(&q.key(state, t, status))
}
