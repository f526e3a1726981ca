//! Poisson cell-occupancy probabilities and the RCLA stability certificate.
//!
//! Under a homogeneous Poisson noise process of intensity λ, the noise count of
//! every δ-cube is an independent Pois(μ) variable with μ = λ·δ^m. Given the
//! shape occupancy of each cube, the probability that no pure-noise cube
//! survives the threshold (`1 − α`) and that no shape cube is dropped
//! (`1 − β`) have closed forms; with probability at least `1 − (α + β)` the
//! bottleneck distance between the shape diagrams and the RCLA output diagrams
//! is at most √m·δ.

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::grid::{histogram, GridSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub lambda: f64,
    pub mu: f64,
}

impl NoiseModel {
    pub fn new(lambda: f64, delta: f64, dim: usize) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be nonnegative, got {lambda}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        Ok(Self {
            lambda,
            mu: lambda * delta.powi(dim as i32),
        })
    }
}

/// Shape counts of every cube of a grid. Zero cells are kept as a count only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeOccupancy {
    positive: Vec<u64>,
    num_zero: u64,
}

impl ShapeOccupancy {
    /// From the full per-cell list, zeros included.
    pub fn from_counts(counts: &[u64]) -> Self {
        let positive: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
        let num_zero = (counts.len() - positive.len()) as u64;
        Self { positive, num_zero }
    }

    pub fn from_parts(positive: Vec<u64>, num_zero: u64) -> Result<Self> {
        if positive.contains(&0) {
            return Err(Error::InvalidParameter("positive shape counts must be > 0".into()));
        }
        Ok(Self { positive, num_zero })
    }

    /// Counts `shape` over every cell of `grid`.
    pub fn from_cloud(shape: &PointCloud, grid: &GridSpec) -> Result<Self> {
        let hist = histogram(shape, grid)?;
        let positive: Vec<u64> = hist.iter().map(|(_, e)| e.count as u64).collect();
        let num_zero = grid.num_cells() - positive.len() as u64;
        Ok(Self { positive, num_zero })
    }

    pub fn positive_counts(&self) -> &[u64] {
        &self.positive
    }

    pub fn num_zero(&self) -> u64 {
        self.num_zero
    }

    pub fn num_cells(&self) -> u64 {
        self.num_zero + self.positive.len() as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub alpha: f64,
    pub beta: f64,
    /// `1 − (α + β)`; negative values mean the certificate is vacuous.
    pub confidence: f64,
    pub bound: f64,
}

fn check_mu(mu: f64) -> Result<()> {
    if mu >= 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Poisson mean must be nonnegative, got {mu}")))
    }
}

/// ln of the Pois(μ) mass at `j`, by accumulating ln(μ/i).
fn ln_pmf(mu: f64, j: u64) -> f64 {
    let ln_mu = mu.ln();
    let mut lt = -mu;
    for i in 1..=j {
        lt += ln_mu - (i as f64).ln();
    }
    lt
}

/// P(Pois(μ) ≤ r); zero for r < 0.
pub fn pois_cdf(mu: f64, r: i64) -> Result<f64> {
    check_mu(mu)?;
    if r < 0 {
        return Ok(0.0);
    }
    if mu == 0.0 {
        return Ok(1.0);
    }
    let start = (-mu).exp();
    if start > 1e-280 {
        let mut term = start;
        let mut sum = term;
        for j in 1..=r {
            term *= mu / j as f64;
            sum += term;
            if (j as f64) > mu && term < sum * 1e-18 {
                break;
            }
        }
        return Ok(sum.min(1.0));
    }
    // e^{-μ} underflows: log-sum-exp over the terms
    let ln_mu = mu.ln();
    let mut lt = -mu;
    let mut terms = Vec::with_capacity(r as usize + 1);
    terms.push(lt);
    for j in 1..=r {
        lt += ln_mu - (j as f64).ln();
        terms.push(lt);
    }
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = terms.iter().map(|t| (t - top).exp()).sum();
    Ok((top + s.ln()).exp().min(1.0))
}

/// P(Pois(μ) ≥ k).
pub fn pois_tail(mu: f64, k: u64) -> Result<f64> {
    check_mu(mu)?;
    if k == 0 {
        return Ok(1.0);
    }
    if mu == 0.0 {
        return Ok(0.0);
    }
    if (k - 1) as f64 >= mu {
        // direct upper sum avoids cancellation in 1 − F(k−1)
        let mut term = ln_pmf(mu, k).exp();
        let mut sum = term;
        let mut j = k;
        while term > sum * 1e-18 && term > 0.0 {
            j += 1;
            term *= mu / j as f64;
            sum += term;
        }
        return Ok(sum.min(1.0));
    }
    Ok(1.0 - pois_cdf(mu, k as i64 - 1)?)
}

fn ln_prob_no_noise_cubes(mu: f64, k: u64, num_zero: u64) -> Result<f64> {
    check_mu(mu)?;
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if num_zero == 0 {
        return Ok(0.0);
    }
    // ln F(k−1) = ln(1 − P(N ≥ k))
    let ln_f = (-pois_tail(mu, k)?).ln_1p();
    Ok(num_zero as f64 * ln_f)
}

fn ln_prob_no_outshape_cubes(mu: f64, k: u64, shape_counts: &[u64]) -> Result<f64> {
    check_mu(mu)?;
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let mut acc = 0.0;
    for &n in shape_counts {
        if n == 0 {
            return Err(Error::InvalidParameter("shape counts must be positive".into()));
        }
        // factor 1 − F(r−1) = P(N ≥ r), equal to 1 when r = 0
        let r = k.saturating_sub(n);
        acc += pois_tail(mu, r)?.ln();
    }
    Ok(acc)
}

/// Probability that no cube without shape points collects `k` or more noise
/// points.
pub fn prob_no_noise_cubes(mu: f64, k: u64, num_zero_shape_cells: u64) -> Result<f64> {
    Ok(ln_prob_no_noise_cubes(mu, k, num_zero_shape_cells)?.exp())
}

/// Probability that every cube holding shape points reaches `k` points in
/// total.
pub fn prob_no_outshape_cubes(mu: f64, k: u64, shape_counts: &[u64]) -> Result<f64> {
    Ok(ln_prob_no_outshape_cubes(mu, k, shape_counts)?.exp())
}

pub fn stability_certificate(
    occ: &ShapeOccupancy,
    lambda: f64,
    delta: f64,
    k: u64,
    dim: usize,
) -> Result<StabilityCertificate> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let noise = NoiseModel::new(lambda, delta, dim)?;
    certificate_for_mu(occ, noise.mu, delta, k, dim)
}

/// Certificate for a given per-cell noise mean μ.
pub fn certificate_for_mu(
    occ: &ShapeOccupancy,
    mu: f64,
    delta: f64,
    k: u64,
    dim: usize,
) -> Result<StabilityCertificate> {
    let alpha = 0.0 - ln_prob_no_noise_cubes(mu, k, occ.num_zero)?.exp_m1();
    let beta = 0.0 - ln_prob_no_outshape_cubes(mu, k, &occ.positive)?.exp_m1();
    Ok(StabilityCertificate {
        alpha,
        beta,
        confidence: 1.0 - (alpha + beta),
        bound: (dim as f64).sqrt() * delta,
    })
}
