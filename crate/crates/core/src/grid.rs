//! Half-open δ-cube partition of the ambient space.
//!
//! Cell `(j_1, …, j_m)` is the box `∏ [o_i + j_i·δ, o_i + (j_i+1)·δ)`, where
//! `o` is the grid origin. Points on an upper face belong to the next cell.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Integer cell coordinates. Ordering is lexicographic.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellKey(pub Vec<i64>);

impl CellKey {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    origin: Vec<f64>,
    delta: f64,
    extent: Vec<u64>,
}

impl GridSpec {
    pub fn new(origin: Vec<f64>, delta: f64, extent: Vec<u64>) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        if origin.is_empty() || origin.len() != extent.len() {
            return Err(Error::DimensionMismatch {
                expected: origin.len(),
                found: extent.len(),
            });
        }
        if extent.iter().any(|&e| e == 0) {
            return Err(Error::InvalidParameter("grid extent must be at least 1 per axis".into()));
        }
        let grid = Self { origin, delta, extent };
        grid.checked_num_cells()
            .ok_or_else(|| Error::InvalidParameter("grid has too many cells".into()))?;
        Ok(grid)
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn extent(&self) -> &[u64] {
        &self.extent
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    fn checked_num_cells(&self) -> Option<u64> {
        self.extent.iter().try_fold(1u64, |acc, &e| acc.checked_mul(e))
    }

    /// Total cell count `M = ∏ extent_i`.
    pub fn num_cells(&self) -> u64 {
        // validated at construction
        self.checked_num_cells().unwrap_or(u64::MAX)
    }

    pub fn contains(&self, key: &CellKey) -> bool {
        key.dim() == self.dim()
            && key
                .0
                .iter()
                .zip(&self.extent)
                .all(|(&j, &e)| j >= 0 && (j as u64) < e)
    }
}

/// Cell containing `p`: `j_i = ⌊(p_i − o_i)/δ⌋`. Keys outside the extent are
/// returned as-is.
pub fn cell_of(p: &[f64], grid: &GridSpec) -> CellKey {
    CellKey(
        p.iter()
            .zip(&grid.origin)
            .map(|(&x, &o)| ((x - o) / grid.delta).floor() as i64)
            .collect(),
    )
}

pub fn cell_center(key: &CellKey, grid: &GridSpec) -> Vec<f64> {
    key.0
        .iter()
        .zip(&grid.origin)
        .map(|(&j, &o)| o + (j as f64 + 0.5) * grid.delta)
        .collect()
}

/// Grid anchored at the coordinate-wise minimum of the cloud, just large
/// enough to cover every point.
pub fn build_grid(cloud: &PointCloud, delta: f64) -> Result<GridSpec> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let (lo, hi) = cloud.bounds().ok_or(Error::EmptyInput)?;
    let extent = lo
        .iter()
        .zip(&hi)
        .map(|(&l, &h)| {
            let span = ((h - l) / delta).floor();
            if span >= (u64::MAX / 2) as f64 {
                u64::MAX
            } else {
                span as u64 + 1
            }
        })
        .collect();
    GridSpec::new(lo, delta, extent)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellEntry {
    pub count: usize,
    /// Index of the first input point that landed in the cell.
    pub first_index: usize,
}

/// Occupied cells with their counts, in lexicographic key order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CellHistogram {
    cells: BTreeMap<CellKey, CellEntry>,
}

impl CellHistogram {
    pub fn get(&self, key: &CellKey) -> Option<&CellEntry> {
        self.cells.get(key)
    }

    pub fn count(&self, key: &CellKey) -> usize {
        self.cells.get(key).map_or(0, |e| e.count)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CellKey, &CellEntry)> {
        self.cells.iter()
    }

    /// Number of occupied cells.
    pub fn occupied(&self) -> usize {
        self.cells.len()
    }

    pub fn total(&self) -> usize {
        self.cells.values().map(|e| e.count).sum()
    }
}

pub fn histogram(cloud: &PointCloud, grid: &GridSpec) -> Result<CellHistogram> {
    if cloud.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            found: cloud.dim(),
        });
    }
    let mut cells = BTreeMap::new();
    for (index, p) in cloud.iter().enumerate() {
        let key = cell_of(p, grid);
        if !grid.contains(&key) {
            return Err(Error::PointOutsideGrid { index });
        }
        cells
            .entry(key)
            .and_modify(|e: &mut CellEntry| e.count += 1)
            .or_insert(CellEntry { count: 1, first_index: index });
    }
    Ok(CellHistogram { cells })
}
