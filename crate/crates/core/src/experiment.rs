//! Seeded comparison runs: noisy shape → reduction → H1 diagram → bottleneck
//! distance to the clean shape's H1 diagram, over noise ratios and trials.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autoselect::{auto_select, AutoSelectConfig};
use crate::bottleneck::bottleneck_distance;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::io::CurveRow;
use crate::persistence::{distance_matrix, vr_persistence_scaled, PersistenceDiagram, Scale};
use crate::reduction::{cla_reduce, rcla_reduce, ReductionParams, RepresentativeMode};
use crate::synth::{
    derive_seed, make_noisy_dataset, sample_circle, sample_two_circles, AxisBox, Circle, RngSeed,
    TwoCircles, UNIT_CIRCLE_DATASET,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Dataset {
    Circle(Circle),
    TwoCircles(TwoCircles),
}

impl Dataset {
    pub fn circle() -> Self {
        Dataset::Circle(UNIT_CIRCLE_DATASET)
    }

    pub fn two_circles() -> Self {
        Dataset::TwoCircles(TwoCircles::default())
    }

    pub fn sample(&self, n: usize, seed: RngSeed) -> Result<PointCloud> {
        let mut rng = seed.rng();
        match self {
            Dataset::Circle(c) => sample_circle(n, c.center, c.radius, &mut rng),
            Dataset::TwoCircles(g) => sample_two_circles(n, g, &mut rng),
        }
    }
}

impl FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(Dataset::circle()),
            "two-circles" => Ok(Dataset::two_circles()),
            other => Err(Error::InvalidParameter(format!("unknown dataset {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cla,
    Rcla,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Params {
    /// δ (and for RCLA, k) chosen per trial by automatic selection. CLA
    /// uses the same δ as RCLA on that trial.
    Auto,
    Fixed { delta: f64, k: usize },
}

/// Written as `cla-auto`, `rcla-auto`, `cla:DELTA` or `rcla:DELTA:K`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Variant {
    pub method: Method,
    pub params: Params,
}

impl Variant {
    pub const CLA_AUTO: Variant = Variant {
        method: Method::Cla,
        params: Params::Auto,
    };
    pub const RCLA_AUTO: Variant = Variant {
        method: Method::Rcla,
        params: Params::Auto,
    };
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.method {
            Method::Cla => "cla",
            Method::Rcla => "rcla",
        };
        match (self.method, self.params) {
            (_, Params::Auto) => write!(f, "{name}-auto"),
            (Method::Cla, Params::Fixed { delta, .. }) => write!(f, "{name}:{delta}"),
            (Method::Rcla, Params::Fixed { delta, k }) => write!(f, "{name}:{delta}:{k}"),
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad variant {s:?}"));
        match s {
            "cla-auto" => return Ok(Variant::CLA_AUTO),
            "rcla-auto" => return Ok(Variant::RCLA_AUTO),
            _ => {}
        }
        let parts: Vec<&str> = s.split(':').collect();
        let delta = |p: &str| p.parse::<f64>().ok().filter(|d| *d > 0.0).ok_or_else(bad);
        match parts.as_slice() {
            ["cla", d] => Ok(Variant {
                method: Method::Cla,
                params: Params::Fixed { delta: delta(d)?, k: 1 },
            }),
            ["rcla", d, k] => Ok(Variant {
                method: Method::Rcla,
                params: Params::Fixed {
                    delta: delta(d)?,
                    k: k.parse().ok().filter(|k| *k >= 1).ok_or_else(bad)?,
                },
            }),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for Variant {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Variant> for String {
    fn from(v: Variant) -> String {
        v.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dataset: Dataset,
    pub n_shape: usize,
    pub ratios: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub variants: Vec<Variant>,
    /// Unit in which diagrams and distances are reported. Defaults to
    /// pairwise distance, the convention of common Rips software.
    pub scale: Scale,
    pub mode: RepresentativeMode,
    pub autoselect: AutoSelectConfig,
}

impl ExperimentSpec {
    pub fn new(dataset: Dataset, ratios: Vec<f64>, trials: usize, master_seed: u64) -> Self {
        Self {
            dataset,
            n_shape: 1000,
            ratios,
            trials,
            master_seed,
            variants: vec![Variant::CLA_AUTO, Variant::RCLA_AUTO],
            scale: Scale::Dist,
            mode: RepresentativeMode::Center,
            autoselect: AutoSelectConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.n_shape < 1 {
            return Err(Error::InvalidParameter("n_shape must be at least 1".into()));
        }
        if self.ratios.is_empty() || self.ratios.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return Err(Error::InvalidParameter("ratios must be a nonempty subset of (0, 1]".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::InvalidParameter("no variants to run".into()));
        }
        self.autoselect.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub delta: Option<f64>,
    pub k: Option<usize>,
    pub n_reps: Option<usize>,
    pub distance: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub variant: Variant,
    pub ratio: f64,
    pub trials: Vec<TrialRecord>,
    /// Mean over successful trials.
    pub mean: Option<f64>,
    /// Sample standard deviation over successful trials.
    pub sd: Option<f64>,
    pub failures: usize,
    /// Set when the sd is not informative (fewer than two successes).
    pub note: Option<String>,
}

impl CellReport {
    pub fn distances(&self) -> Vec<f64> {
        self.trials.iter().filter_map(|t| t.distance).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub spec: ExperimentSpec,
    pub cells: Vec<CellReport>,
}

impl ExperimentReport {
    pub fn cell(&self, variant: Variant, ratio: f64) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.variant == variant && c.ratio == ratio)
    }

    pub fn curve(&self) -> Vec<CurveRow> {
        self.cells
            .iter()
            .map(|c| CurveRow {
                ratio: c.ratio,
                variant: c.variant.to_string(),
                mean: c.mean.unwrap_or(f64::NAN),
                sd: c.sd.unwrap_or(f64::NAN),
            })
            .collect()
    }
}

/// Mean and sample standard deviation; the sd is 0 for a single value.
pub fn mean_sd(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, sd))
}

/// H1 diagram over the full filtration.
pub fn h1_diagram(cloud: &PointCloud, scale: Scale) -> Result<PersistenceDiagram> {
    let dm = distance_matrix(cloud)?;
    let mut ds = vr_persistence_scaled(&dm, 1, f64::INFINITY, scale)?;
    Ok(ds.pop().expect("degree-1 diagram"))
}

struct Outcome {
    delta: Option<f64>,
    k: Option<usize>,
    n_reps: Option<usize>,
    result: Result<f64>,
}

fn run_trial(spec: &ExperimentSpec, ratio: f64, seed: u64) -> Vec<Outcome> {
    let fail = |e: &Error| {
        spec.variants
            .iter()
            .map(|_| Outcome {
                delta: None,
                k: None,
                n_reps: None,
                result: Err(Error::InvalidParameter(e.to_string())),
            })
            .collect()
    };
    let prepared = (|| {
        let shape = spec.dataset.sample(spec.n_shape, RngSeed::new(seed, 0))?;
        let mut rng = RngSeed::new(seed, 1).rng();
        let noisy = make_noisy_dataset(&shape, ratio, &AxisBox::unit(2), &mut rng)?;
        let clean = h1_diagram(&shape, spec.scale)?;
        Ok::<_, Error>((noisy.cloud, clean))
    })();
    let (cloud, clean) = match prepared {
        Ok(x) => x,
        Err(e) => return fail(&e),
    };
    let needs_auto = spec.variants.iter().any(|v| v.params == Params::Auto);
    let auto = needs_auto.then(|| auto_select(&cloud, &spec.autoselect));
    spec.variants
        .iter()
        .map(|v| {
            let (delta, k) = match v.params {
                Params::Fixed { delta, k } => (delta, k),
                Params::Auto => match auto.as_ref().expect("auto selection ran") {
                    Ok(a) => (a.delta_star, a.k_star as usize),
                    Err(e) => {
                        return Outcome {
                            delta: None,
                            k: None,
                            n_reps: None,
                            result: Err(Error::InvalidParameter(e.to_string())),
                        }
                    }
                },
            };
            let reduced = match v.method {
                Method::Cla => cla_reduce(&cloud, delta, spec.mode).map(|r| (r, 1)),
                Method::Rcla => ReductionParams::new(delta, k, spec.mode)
                    .and_then(|p| rcla_reduce(&cloud, &p))
                    .map(|r| (r, k)),
            };
            match reduced {
                Ok((r, k)) => Outcome {
                    delta: Some(delta),
                    k: Some(k),
                    n_reps: Some(r.points.len()),
                    result: if r.points.is_empty() {
                        Err(Error::EmptyInput)
                    } else {
                        h1_diagram(&r.points, spec.scale)
                            .and_then(|pd| bottleneck_distance(&pd, &clean))
                    },
                },
                Err(e) => Outcome {
                    delta: Some(delta),
                    k: None,
                    n_reps: None,
                    result: Err(e),
                },
            }
        })
        .collect()
}

/// Runs every (ratio, trial) in parallel. Trial `t` at ratio index `i` uses
/// seed `derive_seed(master_seed, i, t)`, so results do not depend on the
/// thread count or on which other ratios are present.
pub fn run_comparison(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.ratios.len())
        .flat_map(|i| (0..spec.trials).map(move |t| (i, t)))
        .collect();
    let outcomes: Vec<(u64, Vec<Outcome>)> = jobs
        .par_iter()
        .map(|&(i, t)| {
            let seed = derive_seed(spec.master_seed, i as u64, t as u64);
            (seed, run_trial(spec, spec.ratios[i], seed))
        })
        .collect();

    let mut cells = Vec::new();
    for (i, &ratio) in spec.ratios.iter().enumerate() {
        for (vi, &variant) in spec.variants.iter().enumerate() {
            let trials: Vec<TrialRecord> = (0..spec.trials)
                .map(|t| {
                    let (seed, outs) = &outcomes[i * spec.trials + t];
                    let o = &outs[vi];
                    TrialRecord {
                        trial: t,
                        seed: *seed,
                        delta: o.delta,
                        k: o.k,
                        n_reps: o.n_reps,
                        distance: o.result.as_ref().ok().copied(),
                        error: o.result.as_ref().err().map(|e| e.to_string()),
                    }
                })
                .collect();
            let ds: Vec<f64> = trials.iter().filter_map(|t| t.distance).collect();
            let stats = mean_sd(&ds);
            let note = match ds.len() {
                0 => Some("no successful trials".to_string()),
                1 => Some("single successful trial; sd reported as 0".to_string()),
                _ => None,
            };
            cells.push(CellReport {
                variant,
                ratio,
                failures: trials.len() - ds.len(),
                trials,
                mean: stats.map(|s| s.0),
                sd: stats.map(|s| s.1),
                note,
            });
        }
    }
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        spec: spec.clone(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_strings() {
        for s in ["cla-auto", "rcla-auto", "cla:0.05", "rcla:0.05:3"] {
            assert_eq!(s.parse::<Variant>().unwrap().to_string(), s);
        }
        for s in ["cla", "rcla:0.1", "rcla:0:2", "rcla:0.1:0", "x-auto"] {
            assert!(s.parse::<Variant>().is_err(), "{s}");
        }
        let json = serde_json::to_string(&Variant::RCLA_AUTO).unwrap();
        assert_eq!(json, "\"rcla-auto\"");
    }

    #[test]
    fn mean_sd_basics() {
        assert_eq!(mean_sd(&[]), None);
        assert_eq!(mean_sd(&[2.0]), Some((2.0, 0.0)));
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        let mut spec = ExperimentSpec::new(Dataset::circle(), vec![0.1], 1, 0);
        assert!(spec.validate().is_ok());
        spec.trials = 0;
        assert!(spec.validate().is_err());
        spec.trials = 1;
        spec.ratios = vec![1.5];
        assert!(spec.validate().is_err());
        spec.ratios = vec![0.0];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn single_trial_report() {
        let mut spec = ExperimentSpec::new(Dataset::circle(), vec![0.1], 1, 11);
        spec.n_shape = 200;
        spec.variants = vec!["rcla:0.04:2".parse().unwrap(), "cla:0.04".parse().unwrap()];
        let report = run_comparison(&spec).unwrap();
        assert_eq!(report.schema_version, SCHEMA_VERSION);
        assert_eq!(report.cells.len(), 2);
        for c in &report.cells {
            assert_eq!(c.trials.len(), 1);
            assert_eq!(c.sd, Some(0.0));
            assert!(c.note.is_some());
            assert_eq!(c.failures, 0);
        }
        assert_eq!(report.curve().len(), 2);
        assert_eq!(run_comparison(&spec).unwrap(), report);
    }
}
