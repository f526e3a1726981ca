//! Descriptive-statistics vectorization of degree-0 and degree-1 diagrams.
//!
//! Per degree the block is: for each of birth, death and lifetime the
//! mean, sd, min, max, q25, q50, q75 (21 values), then the pair count and
//! total persistence. Degree 0 comes first.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persistence::PersistenceDiagram;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Mean,
    Sd,
    Min,
    Max,
    Q25,
    Q50,
    Q75,
}

impl Statistic {
    pub const ALL: [Statistic; 7] = [
        Statistic::Mean,
        Statistic::Sd,
        Statistic::Min,
        Statistic::Max,
        Statistic::Q25,
        Statistic::Q50,
        Statistic::Q75,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Mean => "mean",
            Statistic::Sd => "sd",
            Statistic::Min => "min",
            Statistic::Max => "max",
            Statistic::Q25 => "q25",
            Statistic::Q50 => "q50",
            Statistic::Q75 => "q75",
        }
    }
}

const QUANTITIES: [&str; 3] = ["birth", "death", "life"];

/// One feature name: a per-quantity statistic, or one of the two scalars
/// `count` and `total` (total persistence).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FeatureName {
    Stat(&'static str, Statistic),
    Count,
    Total,
}

impl FeatureName {
    pub fn label(&self) -> String {
        match self {
            FeatureName::Stat(q, s) => format!("{q}_{}", s.name()),
            FeatureName::Count => "count".into(),
            FeatureName::Total => "total".into(),
        }
    }
}

impl FromStr for FeatureName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "count" => return Ok(FeatureName::Count),
            "total" => return Ok(FeatureName::Total),
            _ => {}
        }
        let bad = || Error::InvalidParameter(format!("unknown feature name {s:?}"));
        let (q, stat) = s.split_once('_').ok_or_else(bad)?;
        let q = QUANTITIES.iter().find(|&&x| x == q).ok_or_else(bad)?;
        let stat = Statistic::ALL
            .into_iter()
            .find(|x| x.name() == stat)
            .ok_or_else(bad)?;
        Ok(FeatureName::Stat(q, stat))
    }
}

fn block_names() -> Vec<FeatureName> {
    let mut names = Vec::with_capacity(23);
    for q in QUANTITIES {
        for s in Statistic::ALL {
            names.push(FeatureName::Stat(q, s));
        }
    }
    names.push(FeatureName::Count);
    names.push(FeatureName::Total);
    names
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub schema: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.schema.iter().position(|s| s == label).map(|i| self.values[i])
    }
}

/// Linear-interpolation quantile of sorted data (position p·(n−1)).
pub fn quantile_linear(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn stat_values(xs: &[f64]) -> [f64; 7] {
    if xs.is_empty() {
        return [0.0; 7];
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let sd = if sorted.len() > 1 {
        (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    [
        mean,
        sd,
        sorted[0],
        sorted[sorted.len() - 1],
        quantile_linear(&sorted, 0.25),
        quantile_linear(&sorted, 0.5),
        quantile_linear(&sorted, 0.75),
    ]
}

fn block(diagram: &PersistenceDiagram, cap: f64) -> Vec<f64> {
    let births: Vec<f64> = diagram.pairs.iter().map(|p| p.0).collect();
    let deaths: Vec<f64> = diagram
        .pairs
        .iter()
        .map(|p| if p.1.is_finite() { p.1 } else { cap })
        .collect();
    let lives: Vec<f64> = births.iter().zip(&deaths).map(|(b, d)| d - b).collect();
    let mut out = Vec::with_capacity(23);
    for xs in [&births, &deaths, &lives] {
        out.extend(stat_values(xs));
    }
    out.push(diagram.pairs.len() as f64);
    out.push(lives.iter().sum());
    out
}

/// Feature vector for `[H0, H1]`, with infinite deaths replaced by `cap`.
/// Names in `drop` are removed from both blocks.
pub fn diagram_features(
    diagrams: &[PersistenceDiagram],
    cap: f64,
    drop: &[FeatureName],
) -> Result<FeatureVector> {
    if !(cap > 0.0 && cap.is_finite()) {
        return Err(Error::InvalidParameter(format!("cap must be positive, got {cap}")));
    }
    let names = block_names();
    let mut schema = Vec::new();
    let mut values = Vec::new();
    for degree in 0..2 {
        let diagram = diagrams
            .iter()
            .find(|d| d.degree == degree)
            .ok_or_else(|| Error::InvalidParameter(format!("missing degree-{degree} diagram")))?;
        for (name, v) in names.iter().zip(block(diagram, cap)) {
            if drop.contains(name) {
                continue;
            }
            schema.push(format!("h{degree}_{}", name.label()));
            values.push(v);
        }
    }
    Ok(FeatureVector { schema, values })
}
