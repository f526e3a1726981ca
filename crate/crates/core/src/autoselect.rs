//! Automatic choice of the grid side δ and occupancy threshold k.
//!
//! Candidate sides come from a log-spaced grid between two quantiles of the
//! pooled q-nearest-neighbor distances. For each side, the fraction of empty
//! cells bounds the per-cell noise mean from above through a Jeffreys-prior
//! Beta posterior, and k is the smallest threshold whose expected number of
//! surviving pure-noise cells stays within the false-positive budget. The
//! surviving candidates are scored by
//!
//! ```text
//! J(δ) = σ(d_NN) · μ(d_NN) + η · (β0 − 1)
//! ```
//!
//! over the 1-NN distances of the representatives and the number of connected
//! components of their radius graph at `c_r · δ`; the smallest J wins.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{euclidean, PointCloud};
use crate::error::{Error, Result};
use crate::grid::{build_grid, histogram};
use crate::poisson::pois_tail;
use crate::reduction::{rcla_reduce_on_grid, RepresentativeMode};
use crate::special::beta_quantile;
use crate::union_find::DisjointSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AutoSelectConfig {
    /// Neighbor orders whose distances are pooled.
    pub neighbor_orders: Vec<usize>,
    pub q_lo: f64,
    pub q_hi: f64,
    pub n_candidates: usize,
    /// Lower-tail level of the Beta posterior.
    pub gamma: f64,
    /// Expected number of pure-noise cells allowed to survive.
    pub alpha_fp: f64,
    /// Weight of the fragmentation penalty.
    pub eta: f64,
    /// Radius-graph radius as a multiple of δ.
    pub c_r: f64,
    pub n_min: usize,
}

impl Default for AutoSelectConfig {
    fn default() -> Self {
        Self {
            neighbor_orders: vec![5, 8, 16],
            q_lo: 0.01,
            q_hi: 0.70,
            n_candidates: 20,
            gamma: 0.05,
            alpha_fp: 1.0,
            eta: 1.0,
            c_r: 1.5,
            n_min: 50,
        }
    }
}

impl AutoSelectConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.neighbor_orders.is_empty() || self.neighbor_orders.contains(&0) {
            return bad("neighbor orders must be a nonempty set of positive integers");
        }
        if !(self.q_lo > 0.0 && self.q_lo < self.q_hi && self.q_hi <= 1.0) {
            return bad("quantile bounds must satisfy 0 < q_lo < q_hi <= 1");
        }
        if self.n_candidates < 2 {
            return bad("need at least two candidates");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.alpha_fp > 0.0 && self.alpha_fp.is_finite()) {
            return bad("alpha_fp must be positive");
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad("eta must be nonnegative");
        }
        if !(self.c_r > 0.0 && self.c_r.is_finite()) {
            return bad("c_r must be positive");
        }
        if self.n_min < 1 {
            return bad("n_min must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub delta: f64,
    /// Cells in the bounding-box grid.
    pub num_cells: u64,
    pub empty_cells: u64,
    pub p_lower: f64,
    pub mu_upper: f64,
    pub k: u64,
    pub n_reps: usize,
    pub nn_mean: Option<f64>,
    pub nn_sd: Option<f64>,
    pub beta0: Option<usize>,
    pub j: Option<f64>,
    pub rejected: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoSelectResult {
    pub delta_star: f64,
    pub k_star: u64,
    pub reports: Vec<CandidateReport>,
}

impl AutoSelectResult {
    pub fn selected(&self) -> Option<&CandidateReport> {
        self.reports
            .iter()
            .find(|r| r.rejected.is_none() && r.delta == self.delta_star && r.k == self.k_star)
    }
}

/// Distance from every point to its `q`-th nearest other point.
pub fn knn_distance(cloud: &PointCloud, q: usize) -> Result<Vec<f64>> {
    Ok(knn_distances(cloud, &[q])?.pop().unwrap_or_default())
}

/// One vector per requested order, each aligned with the input.
fn knn_distances(cloud: &PointCloud, orders: &[usize]) -> Result<Vec<Vec<f64>>> {
    let q_max = orders.iter().copied().max().unwrap_or(0);
    if q_max == 0 {
        return Err(Error::InvalidParameter("neighbor order must be positive".into()));
    }
    if cloud.len() <= q_max {
        return Err(Error::NotEnoughPoints {
            needed: q_max + 1,
            have: cloud.len(),
        });
    }
    let n = cloud.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = cloud.point(i);
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| euclidean(p, cloud.point(j)))
                .collect();
            d.select_nth_unstable_by(q_max - 1, f64::total_cmp);
            let head = &mut d[..q_max];
            head.sort_unstable_by(f64::total_cmp);
            orders.iter().map(|&q| head[q - 1]).collect()
        })
        .collect();
    Ok((0..orders.len())
        .map(|o| rows.iter().map(|r| r[o]).collect())
        .collect())
}

/// Quantile of sorted data with linear interpolation between order
/// statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `n` geometrically spaced values from `a` to `b`, endpoints included.
pub fn geometric_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let ratio = (b / a).ln();
    (0..n)
        .map(|i| {
            if i == 0 {
                a
            } else if i == n - 1 {
                b
            } else {
                a * (ratio * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

pub fn delta_candidates(cloud: &PointCloud, config: &AutoSelectConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let mut pooled: Vec<f64> = knn_distances(cloud, &config.neighbor_orders)?
        .into_iter()
        .flatten()
        .collect();
    pooled.sort_unstable_by(f64::total_cmp);
    let min_positive = pooled
        .iter()
        .copied()
        .find(|&d| d > 0.0)
        .ok_or_else(|| Error::DegenerateCloud("all nearest-neighbor distances are zero".into()))?;
    let a = quantile_sorted(&pooled, config.q_lo).max(min_positive);
    let b = quantile_sorted(&pooled, config.q_hi).max(a);
    Ok(geometric_grid(a, b, config.n_candidates))
}

/// Returns `(p_L, μ_U)`: the γ-quantile of the Beta(Z0 + ½, M − Z0 + ½)
/// posterior of the empty-cell probability and the noise-mean bound −ln p_L.
pub fn mu_upper(empty_cells: u64, num_cells: u64, gamma: f64) -> Result<(f64, f64)> {
    if num_cells == 0 || empty_cells > num_cells {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= Z0 <= M and M >= 1, got Z0 = {empty_cells}, M = {num_cells}"
        )));
    }
    let a = empty_cells as f64 + 0.5;
    let b = (num_cells - empty_cells) as f64 + 0.5;
    let p_lower = beta_quantile(a, b, gamma)?;
    Ok((p_lower, -p_lower.ln()))
}

/// Smallest k >= 1 with `M · P(Pois(μ_U) >= k) <= α_fp`.
pub fn select_k(num_cells: u64, mu_u: f64, alpha_fp: f64) -> Result<u64> {
    if num_cells == 0 {
        return Err(Error::InvalidParameter("grid has no cells".into()));
    }
    if !(alpha_fp > 0.0) {
        return Err(Error::InvalidParameter("alpha_fp must be positive".into()));
    }
    let m = num_cells as f64;
    let mut k = 1;
    while m * pois_tail(mu_u, k)? > alpha_fp {
        k += 1;
    }
    Ok(k)
}

/// Connected components of the graph joining points at distance <= radius.
pub fn betti0_radius_graph(points: &PointCloud, radius: f64) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = points.len();
    let mut ds = DisjointSet::new(n);
    for i in 0..n {
        for j in 0..i {
            if euclidean(points.point(i), points.point(j)) <= radius {
                ds.union(i, j);
            }
        }
    }
    Ok(ds.components())
}

/// Mean and population standard deviation of 1-NN distances.
pub fn nn1_stats(points: &PointCloud) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::NotEnoughPoints {
            needed: 2,
            have: points.len(),
        });
    }
    let n = points.len();
    let nn: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = points.point(i);
            (0..n)
                .filter(|&j| j != i)
                .map(|j| euclidean(p, points.point(j)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mean = nn.iter().sum::<f64>() / n as f64;
    let var = nn.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n as f64;
    Ok((mean, var.sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quality {
    pub nn_mean: f64,
    pub nn_sd: f64,
    pub beta0: usize,
    pub j: f64,
}

pub fn quality_j(reps: &PointCloud, delta: f64, config: &AutoSelectConfig) -> Result<Quality> {
    let (nn_mean, nn_sd) = nn1_stats(reps)?;
    let beta0 = betti0_radius_graph(reps, config.c_r * delta)?;
    Ok(Quality {
        nn_mean,
        nn_sd,
        beta0,
        j: nn_sd * nn_mean + config.eta * (beta0 as f64 - 1.0),
    })
}

fn evaluate(cloud: &PointCloud, delta: f64, config: &AutoSelectConfig) -> Result<CandidateReport> {
    let grid = build_grid(cloud, delta)?;
    let num_cells = grid.num_cells();
    let occupied = histogram(cloud, &grid)?.occupied() as u64;
    let empty_cells = num_cells - occupied;
    let (p_lower, mu_u) = mu_upper(empty_cells, num_cells, config.gamma)?;
    let k = select_k(num_cells, mu_u, config.alpha_fp)?;
    let reduced = rcla_reduce_on_grid(cloud, &grid, k as usize, RepresentativeMode::Center)?;
    let mut report = CandidateReport {
        delta,
        num_cells,
        empty_cells,
        p_lower,
        mu_upper: mu_u,
        k,
        n_reps: reduced.points.len(),
        nn_mean: None,
        nn_sd: None,
        beta0: None,
        j: None,
        rejected: None,
    };
    if report.n_reps < config.n_min {
        report.rejected = Some(format!(
            "{} representatives, fewer than n_min = {}",
            report.n_reps, config.n_min
        ));
        return Ok(report);
    }
    if report.n_reps < 2 {
        report.rejected = Some("fewer than 2 representatives".into());
        return Ok(report);
    }
    let q = quality_j(&reduced.points, delta, config)?;
    report.nn_mean = Some(q.nn_mean);
    report.nn_sd = Some(q.nn_sd);
    report.beta0 = Some(q.beta0);
    report.j = Some(q.j);
    Ok(report)
}

pub fn auto_select(cloud: &PointCloud, config: &AutoSelectConfig) -> Result<AutoSelectResult> {
    let candidates = delta_candidates(cloud, config)?;
    let reports: Vec<CandidateReport> = candidates
        .par_iter()
        .map(|&delta| {
            evaluate(cloud, delta, config).unwrap_or_else(|e| CandidateReport {
                delta,
                num_cells: 0,
                empty_cells: 0,
                p_lower: f64::NAN,
                mu_upper: f64::NAN,
                k: 0,
                n_reps: 0,
                nn_mean: None,
                nn_sd: None,
                beta0: None,
                j: None,
                rejected: Some(e.to_string()),
            })
        })
        .collect();

    // candidates ascend, so a strict comparison keeps the smaller δ on ties
    let mut best: Option<&CandidateReport> = None;
    for r in &reports {
        if let (None, Some(j)) = (&r.rejected, r.j) {
            if best.is_none_or(|b| j < b.j.unwrap_or(f64::INFINITY)) {
                best = Some(r);
            }
        }
    }
    match best {
        Some(b) => Ok(AutoSelectResult {
            delta_star: b.delta,
            k_star: b.k,
            reports: reports.clone(),
        }),
        None => Err(Error::NoFeasibleCandidate { reports }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> PointCloud {
        let rows: Vec<[f64; 1]> = xs.iter().map(|&x| [x]).collect();
        PointCloud::from_rows(&rows).unwrap()
    }

    #[test]
    fn knn_examples() {
        let c = line(&[0.0, 1.0, 3.0]);
        assert_eq!(knn_distance(&c, 1).unwrap(), vec![1.0, 1.0, 2.0]);
        assert_eq!(knn_distance(&c, 2).unwrap(), vec![3.0, 2.0, 3.0]);
        let d = line(&[0.0, 0.0, 5.0]);
        let v = knn_distance(&d, 1).unwrap();
        assert_eq!(&v[..2], &[0.0, 0.0]);
        assert!(matches!(knn_distance(&c, 3), Err(Error::NotEnoughPoints { .. })));
    }

    #[test]
    fn geometric_grid_examples() {
        let g = geometric_grid(0.01, 1.0, 3);
        assert_eq!(g[0], 0.01);
        assert!((g[1] - 0.1).abs() < 1e-15);
        assert_eq!(g[2], 1.0);
        assert!(geometric_grid(0.3, 0.3, 20).iter().all(|&x| x == 0.3));
    }

    #[test]
    fn candidates_on_a_regular_lattice_collapse() {
        // every point of a long 1-D lattice has q-NN distance ceil(q/2)
        // except near the ends; with one order the interior dominates
        let xs: Vec<f64> = (0..400).map(|i| i as f64 * 0.5).collect();
        let cfg = AutoSelectConfig {
            neighbor_orders: vec![2],
            q_lo: 0.05,
            q_hi: 0.7,
            ..Default::default()
        };
        let c = delta_candidates(&line(&xs), &cfg).unwrap();
        assert_eq!(c.len(), 20);
        assert!(c.iter().all(|&x| x == 0.5));
    }

    #[test]
    fn candidates_reject_degenerate_cloud() {
        let c = line(&[1.0; 30]);
        assert!(matches!(
            delta_candidates(&c, &AutoSelectConfig::default()),
            Err(Error::DegenerateCloud(_))
        ));
    }

    #[test]
    fn quantile_interpolates() {
        let s = [1.0, 2.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 0.25), 1.5);
        assert_eq!(quantile_sorted(&s, 0.75), 3.0);
        assert_eq!(quantile_sorted(&s, 1.0), 4.0);
    }

    #[test]
    fn mu_upper_examples() {
        let (p, mu) = mu_upper(1000, 1000, 0.05).unwrap();
        assert!(p > 0.99 && mu < 0.1);
        let (p, mu) = mu_upper(5, 10, 0.05).unwrap();
        let expected = beta_quantile(5.5, 5.5, 0.05).unwrap();
        assert_eq!(p, expected);
        assert_eq!(mu, -expected.ln());
        assert!(mu_upper(11, 10, 0.05).is_err());
        assert!(mu_upper(0, 0, 0.05).is_err());
    }

    #[test]
    fn select_k_examples() {
        assert_eq!(select_k(100, 0.0, 1.0).unwrap(), 1);
        // 100 (1 − e^{-0.01}) ≈ 0.995
        assert_eq!(select_k(100, 0.01, 1.0).unwrap(), 1);
        // 100 (1 − e^{-0.1}) ≈ 9.52, 100 (1 − 1.1 e^{-0.1}) ≈ 0.468
        assert_eq!(select_k(100, 0.1, 1.0).unwrap(), 2);
    }

    #[test]
    fn betti0_examples() {
        let c = line(&[0.0, 1.0, 2.0, 10.0]);
        assert_eq!(betti0_radius_graph(&c, 1.0).unwrap(), 2);
        assert_eq!(betti0_radius_graph(&c, 0.5).unwrap(), 4);
        assert_eq!(betti0_radius_graph(&c, 10.0).unwrap(), 1);
        assert!(betti0_radius_graph(&PointCloud::empty(1).unwrap(), 1.0).is_err());
    }

    #[test]
    fn quality_examples() {
        let cfg = AutoSelectConfig::default();
        let lattice = line(&(0..10).map(|i| i as f64).collect::<Vec<_>>());
        let q = quality_j(&lattice, 1.0, &cfg).unwrap();
        assert_eq!((q.j, q.beta0), (0.0, 1));

        let two = line(&[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
        assert_eq!(quality_j(&two, 1.0, &cfg).unwrap().j, 1.0);

        // 1-NN distances [1, 1, 2]: μ = 4/3, σ = √2/3
        let reps = line(&[0.0, 1.0, 3.0]);
        let spread = 4.0 * 2f64.sqrt() / 9.0;
        assert!((spread - 0.628_539_361_0).abs() < 1e-10);
        // radius 1.5 leaves the gap of 2 open: two components
        let q = quality_j(&reps, 1.0, &cfg).unwrap();
        assert_eq!(q.beta0, 2);
        assert!((q.j - (spread + 1.0)).abs() < 1e-15);
        // radius 3 closes it
        let q = quality_j(&reps, 2.0, &cfg).unwrap();
        assert_eq!(q.beta0, 1);
        assert!((q.j - spread).abs() < 1e-15);

        assert!(quality_j(&line(&[0.0]), 1.0, &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(AutoSelectConfig::default().validate().is_ok());
        let bad = [
            AutoSelectConfig { q_lo: 0.8, ..Default::default() },
            AutoSelectConfig { n_candidates: 1, ..Default::default() },
            AutoSelectConfig { gamma: 1.0, ..Default::default() },
            AutoSelectConfig { alpha_fp: 0.0, ..Default::default() },
            AutoSelectConfig { eta: -1.0, ..Default::default() },
            AutoSelectConfig { c_r: 0.0, ..Default::default() },
            AutoSelectConfig { n_min: 0, ..Default::default() },
            AutoSelectConfig { neighbor_orders: vec![], ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    proptest! {
        #[test]
        fn select_k_monotone(m in 1u64..100_000, mu in 0.0f64..3.0, dmu in 0.0f64..1.0,
                             a in 0.05f64..5.0, da in 0.0f64..5.0, dm in 0u64..10_000) {
            let k = select_k(m, mu, a).unwrap();
            prop_assert!(k >= 1);
            prop_assert!(select_k(m, mu, a + da).unwrap() <= k);
            prop_assert!(select_k(m, mu + dmu, a).unwrap() >= k);
            prop_assert!(select_k(m + dm, mu, a).unwrap() >= k);
        }

        #[test]
        fn mu_upper_decreases_with_empty_cells(m in 1u64..5_000, z in 0u64..5_000, gamma in 0.01f64..0.5) {
            let z = z % m;
            let (_, lo) = mu_upper(z + 1, m, gamma).unwrap();
            let (_, hi) = mu_upper(z, m, gamma).unwrap();
            prop_assert!(lo <= hi + 1e-12);
            prop_assert!(lo >= 0.0);
        }

        #[test]
        fn betti0_monotone_in_radius(xs in prop::collection::vec(0.0f64..10.0, 1..40), r in 0.0f64..3.0, dr in 0.0f64..3.0) {
            let c = line(&xs);
            prop_assert!(betti0_radius_graph(&c, r + dr).unwrap() <= betti0_radius_graph(&c, r).unwrap());
        }
    }
}
