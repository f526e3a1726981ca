//! Seeded generators for circle-type shapes and uniform background noise.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// A master seed plus a stream id; equal pairs give equal random streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Per-trial seed from (master, ratio index, trial index). Each trial's seed
/// depends only on its own coordinates.
pub fn derive_seed(master: u64, ratio_index: u64, trial_index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ ratio_index) ^ trial_index.rotate_left(32))
}

/// Axis-aligned box `[lo, hi)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::InvalidParameter("box must have lo < hi on every axis".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (l, h))| l <= x && x < h)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        for (l, h) in self.lo.iter().zip(&self.hi) {
            out.push(rng.random_range(*l..*h));
        }
    }
}

/// `n` points at uniformly random angles on a circle.
pub fn sample_circle<R: Rng + ?Sized>(
    n: usize,
    center: [f64; 2],
    radius: f64,
    rng: &mut R,
) -> Result<PointCloud> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let mut coords = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let t = rng.random_range(0.0..std::f64::consts::TAU);
        coords.push(center[0] + radius * t.cos());
        coords.push(center[1] + radius * t.sin());
    }
    PointCloud::from_flat(2, coords)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Two disjoint circles in the unit square; the larger one gets
/// `large_fraction` of the points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoCircles {
    pub large: Circle,
    pub small: Circle,
    pub large_fraction: f64,
}

impl Default for TwoCircles {
    fn default() -> Self {
        Self {
            large: Circle {
                center: [0.5, 0.55],
                radius: 0.3,
            },
            small: Circle {
                center: [0.25, 0.2],
                radius: 0.1,
            },
            large_fraction: 0.85,
        }
    }
}

/// Default single-circle geometry for the circle dataset.
pub const UNIT_CIRCLE_DATASET: Circle = Circle {
    center: [0.5, 0.5],
    radius: 0.35,
};

pub fn sample_two_circles<R: Rng + ?Sized>(
    n: usize,
    geometry: &TwoCircles,
    rng: &mut R,
) -> Result<PointCloud> {
    let n_large = (geometry.large_fraction * n as f64).round() as usize;
    let mut cloud = sample_circle(n_large, geometry.large.center, geometry.large.radius, rng)?;
    cloud.extend(&sample_circle(
        n - n_large,
        geometry.small.center,
        geometry.small.radius,
        rng,
    )?)?;
    Ok(cloud)
}

/// Homogeneous Poisson process of intensity `lambda` on a box.
pub fn hppp_box<R: Rng + ?Sized>(lambda: f64, bounds: &AxisBox, rng: &mut R) -> Result<PointCloud> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be nonnegative, got {lambda}")));
    }
    let mean = lambda * bounds.volume();
    let count = if mean == 0.0 {
        0
    } else {
        let dist = Poisson::new(mean)
            .map_err(|e| Error::InvalidParameter(format!("Poisson mean {mean}: {e}")))?;
        dist.sample(rng) as usize
    };
    uniform_box(count, bounds, rng)
}

/// `count` independent uniform points in a box.
pub fn uniform_box<R: Rng + ?Sized>(count: usize, bounds: &AxisBox, rng: &mut R) -> Result<PointCloud> {
    let mut coords = Vec::with_capacity(count * bounds.dim());
    for _ in 0..count {
        bounds.sample(rng, &mut coords);
    }
    PointCloud::from_flat(bounds.dim(), coords)
}

/// Shape plus background noise, with a per-point noise flag for evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledCloud {
    pub cloud: PointCloud,
    pub is_noise: Vec<bool>,
}

impl LabeledCloud {
    pub fn noise_count(&self) -> usize {
        self.is_noise.iter().filter(|&&x| x).count()
    }
}

/// Appends `round(r · |shape|)` uniform points in `bounds` to the shape.
pub fn make_noisy_dataset<R: Rng + ?Sized>(
    shape: &PointCloud,
    r: f64,
    bounds: &AxisBox,
    rng: &mut R,
) -> Result<LabeledCloud> {
    if shape.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise ratio must be nonnegative, got {r}")));
    }
    if bounds.dim() != shape.dim() {
        return Err(Error::DimensionMismatch {
            expected: shape.dim(),
            found: bounds.dim(),
        });
    }
    let n_noise = (r * shape.len() as f64).round() as usize;
    let mut cloud = shape.clone();
    cloud.extend(&uniform_box(n_noise, bounds, rng)?)?;
    let mut is_noise = vec![false; shape.len()];
    is_noise.resize(shape.len() + n_noise, true);
    Ok(LabeledCloud { cloud, is_noise })
}
