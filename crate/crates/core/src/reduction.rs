//! CLA and RCLA: one representative per δ-cube whose occupancy reaches `k`.

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::grid::{build_grid, cell_center, histogram, CellKey, GridSpec};

/// How a surviving cell is represented in the output.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepresentativeMode {
    /// The cube center.
    #[default]
    Center,
    /// The first input point (in input order) that fell into the cube.
    Sample,
}

impl std::str::FromStr for RepresentativeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "center" => Ok(Self::Center),
            "sample" => Ok(Self::Sample),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionParams {
    pub delta: f64,
    pub k: usize,
    pub mode: RepresentativeMode,
}

impl ReductionParams {
    pub fn new(delta: f64, k: usize, mode: RepresentativeMode) -> Result<Self> {
        let p = Self { delta, k, mode };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedCloud {
    pub points: PointCloud,
    /// Surviving cells, lexicographic; aligned with `points`.
    pub kept_cells: Vec<CellKey>,
    /// Input points that fell into cells below the threshold.
    pub dropped_count: usize,
    pub grid: GridSpec,
}

/// RCLA on a grid anchored at the data minimum.
pub fn rcla_reduce(cloud: &PointCloud, params: &ReductionParams) -> Result<ReducedCloud> {
    params.validate()?;
    let grid = build_grid(cloud, params.delta)?;
    rcla_reduce_on_grid(cloud, &grid, params.k, params.mode)
}

/// RCLA on a caller-supplied partition, e.g. a fixed ambient domain.
pub fn rcla_reduce_on_grid(
    cloud: &PointCloud,
    grid: &GridSpec,
    k: usize,
    mode: RepresentativeMode,
) -> Result<ReducedCloud> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput);
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let hist = histogram(cloud, grid)?;
    let mut points = PointCloud::empty(cloud.dim())?;
    let mut kept_cells = Vec::new();
    let mut dropped_count = 0;
    for (key, entry) in hist.iter() {
        if entry.count < k {
            dropped_count += entry.count;
            continue;
        }
        match mode {
            RepresentativeMode::Center => points.push(&cell_center(key, grid))?,
            RepresentativeMode::Sample => points.push(cloud.point(entry.first_index))?,
        }
        kept_cells.push(key.clone());
    }
    Ok(ReducedCloud {
        points,
        kept_cells,
        dropped_count,
        grid: grid.clone(),
    })
}

/// CLA: every occupied cell survives.
pub fn cla_reduce(cloud: &PointCloud, delta: f64, mode: RepresentativeMode) -> Result<ReducedCloud> {
    rcla_reduce(cloud, &ReductionParams::new(delta, 1, mode)?)
}
