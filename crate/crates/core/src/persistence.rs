//! Vietoris–Rips persistent homology in degrees 0 and 1 over GF(2).
//!
//! Diagrams are reported in ε units by default: a simplex enters the
//! filtration once all of its pairwise distances are at most 2ε, so an edge
//! `{i, j}` appears at ε = d(i, j)/2.
//!
//! Degree 0 is computed with union-find over the sorted edges. Degree 1 is
//! computed by reducing the coboundary matrix (edges against triangles) in
//! reverse filtration order. Edges that merge components are cleared, and
//! an edge whose earliest cofacet has the same diameter is paired with it
//! without building its column.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

use serde::{Deserialize, Serialize};

use crate::cloud::{euclidean, PointCloud};
use crate::error::{Error, Result};
use crate::union_find::DisjointSet;

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    /// Wraps a full row-major `n × n` matrix after checking symmetry and a
    /// zero diagonal.
    pub fn from_full(n: usize, d: Vec<f64>) -> Result<Self> {
        if d.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: d.len(),
            });
        }
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(Error::InvalidParameter("nonzero diagonal entry".into()));
            }
            for j in 0..i {
                let v = d[i * n + j];
                if v != d[j * n + i] || !(v >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "entry ({i}, {j}) is negative or asymmetric"
                    )));
                }
            }
        }
        Ok(Self { n, d })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }
}

pub fn distance_matrix(cloud: &PointCloud) -> Result<DistanceMatrix> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = cloud.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let v = euclidean(cloud.point(i), cloud.point(j));
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    Ok(DistanceMatrix { n, d })
}

/// Unit of the filtration parameter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Half the pairwise distance.
    #[default]
    Eps,
    /// The pairwise distance itself.
    Dist,
}

impl Scale {
    fn factor(self) -> f64 {
        match self {
            Scale::Eps => 0.5,
            Scale::Dist => 1.0,
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eps" => Ok(Scale::Eps),
            "dist" => Ok(Scale::Dist),
            other => Err(Error::InvalidParameter(format!("unknown scale {other:?}"))),
        }
    }
}

/// Bars `(birth, death)` of one homology degree; an essential class has
/// `death = +∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "DiagramJson", try_from = "DiagramJson")]
pub struct PersistenceDiagram {
    pub degree: usize,
    pub pairs: Vec<(f64, f64)>,
}

impl PersistenceDiagram {
    pub fn new(degree: usize, pairs: Vec<(f64, f64)>) -> Self {
        Self { degree, pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn finite(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.pairs.iter().copied().filter(|p| p.1.is_finite())
    }

    pub fn essential(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.pairs.iter().copied().filter(|p| p.1.is_infinite())
    }

    /// Pairs sorted by (birth, death), for multiset comparisons.
    pub fn sorted_pairs(&self) -> Vec<(f64, f64)> {
        let mut v = self.pairs.clone();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        v
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DeathJson {
    Finite(f64),
    Token(String),
}

#[derive(Serialize, Deserialize)]
struct DiagramJson {
    degree: usize,
    pairs: Vec<(f64, DeathJson)>,
}

impl From<PersistenceDiagram> for DiagramJson {
    fn from(d: PersistenceDiagram) -> Self {
        DiagramJson {
            degree: d.degree,
            pairs: d
                .pairs
                .into_iter()
                .map(|(b, e)| {
                    let death = if e.is_infinite() {
                        DeathJson::Token("inf".into())
                    } else {
                        DeathJson::Finite(e)
                    };
                    (b, death)
                })
                .collect(),
        }
    }
}

impl TryFrom<DiagramJson> for PersistenceDiagram {
    type Error = String;

    fn try_from(d: DiagramJson) -> std::result::Result<Self, String> {
        let mut pairs = Vec::with_capacity(d.pairs.len());
        for (b, e) in d.pairs {
            let death = match e {
                DeathJson::Finite(v) => v,
                DeathJson::Token(t) if t == "inf" => f64::INFINITY,
                DeathJson::Token(t) => return Err(format!("unexpected death token {t:?}")),
            };
            pairs.push((b, death));
        }
        Ok(PersistenceDiagram { degree: d.degree, pairs })
    }
}

/// Default filtration cap in ε units: half the bounding-box diameter.
pub fn default_max_scale(cloud: &PointCloud) -> f64 {
    0.5 * cloud.box_diameter()
}

/// Diagrams for degrees `0..=max_degree`, in ε units. Simplices whose
/// filtration value exceeds `max_scale` are left out, so classes alive at
/// the cap are reported with infinite death.
pub fn vr_persistence(
    dm: &DistanceMatrix,
    max_degree: usize,
    max_scale: f64,
) -> Result<Vec<PersistenceDiagram>> {
    vr_persistence_scaled(dm, max_degree, max_scale, Scale::Eps)
}

/// As [`vr_persistence`], with `max_scale` and the output in the given unit.
pub fn vr_persistence_scaled(
    dm: &DistanceMatrix,
    max_degree: usize,
    max_scale: f64,
    scale: Scale,
) -> Result<Vec<PersistenceDiagram>> {
    if dm.is_empty() {
        return Err(Error::EmptyInput);
    }
    if max_degree > 1 {
        return Err(Error::InvalidParameter(format!(
            "degrees above 1 are not supported, got {max_degree}"
        )));
    }
    if !(max_scale > 0.0) {
        return Err(Error::InvalidParameter(format!("max_scale must be positive, got {max_scale}")));
    }
    let factor = scale.factor();
    // Past the enclosing radius the complex is a cone, so nothing is born
    // or dies beyond it.
    let threshold = (max_scale / factor).min(enclosing_radius(dm));
    let rips = Rips::new(dm, threshold);

    let (h0, columns) = rips.degree0();
    let mut out = vec![PersistenceDiagram::new(
        0,
        h0.into_iter().map(|(b, d)| (b * factor, d * factor)).collect(),
    )];
    if max_degree >= 1 {
        let h1 = rips.degree1(columns);
        out.push(PersistenceDiagram::new(
            1,
            h1.into_iter().map(|(b, d)| (b * factor, d * factor)).collect(),
        ));
    }
    Ok(out)
}

/// Smallest eccentricity over the points.
fn enclosing_radius(dm: &DistanceMatrix) -> f64 {
    (0..dm.len())
        .map(|i| dm.row(i).iter().copied().fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

/// A simplex in the order used for the cohomology reduction: the maximum
/// is the earliest simplex in the filtration (smallest diameter, ties broken
/// towards the larger combinatorial index). `rank` is the dense rank of the
/// diameter among the distinct edge lengths.
#[derive(Clone, Copy, Debug)]
struct Entry {
    diam: f64,
    rank: u32,
    index: u64,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.index == other.index
    }
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .rank
            .cmp(&self.rank)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[inline]
fn choose2(n: u64) -> u64 {
    if n < 2 {
        0
    } else {
        n * (n - 1) / 2
    }
}

#[inline]
fn choose3(n: u64) -> u64 {
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

/// Multiplicative hash for the simplex-index keys of the pivot table.
#[derive(Default)]
struct IndexHasher(u64);

impl Hasher for IndexHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0.rotate_left(8) ^ b as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        }
    }

    fn write_u64(&mut self, x: u64) {
        self.0 = (x ^ (x >> 29)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    }
}

type PivotMap = HashMap<u64, usize, BuildHasherDefault<IndexHasher>>;

/// Working coboundary column as one bucket of triangle indices per diameter
/// rank. Entries are only cancelled when their bucket becomes the front, so
/// pushes are cheap appends.
struct BucketQueue {
    buckets: Vec<Vec<u64>>,
    dirty: Vec<bool>,
    occupied: Vec<u64>,
    touched: Vec<u32>,
    cursor: usize,
}

impl BucketQueue {
    fn new(num_ranks: usize) -> Self {
        Self {
            buckets: vec![Vec::new(); num_ranks],
            dirty: vec![false; num_ranks],
            occupied: vec![0; num_ranks.div_ceil(64)],
            touched: Vec::new(),
            cursor: usize::MAX,
        }
    }

    #[inline]
    fn push(&mut self, e: Entry) {
        let r = e.rank as usize;
        let bucket = &mut self.buckets[r];
        if bucket.is_empty() {
            self.occupied[r / 64] |= 1 << (r % 64);
            self.touched.push(e.rank);
        }
        bucket.push(e.index);
        self.dirty[r] = true;
        self.cursor = self.cursor.min(r);
    }

    /// Earliest entry with odd multiplicity, left in place.
    fn peek(&mut self) -> Option<(u32, u64)> {
        loop {
            let mut w = self.cursor / 64;
            let mut bits = *self.occupied.get(w)? & (!0u64 << (self.cursor % 64));
            while bits == 0 {
                w += 1;
                bits = *self.occupied.get(w)?;
            }
            let r = w * 64 + bits.trailing_zeros() as usize;
            self.cursor = r;
            let bucket = &mut self.buckets[r];
            if self.dirty[r] {
                bucket.sort_unstable_by(|a, b| b.cmp(a));
                let mut out = 0;
                let mut i = 0;
                while i < bucket.len() {
                    let mut j = i + 1;
                    while j < bucket.len() && bucket[j] == bucket[i] {
                        j += 1;
                    }
                    if (j - i) % 2 == 1 {
                        bucket[out] = bucket[i];
                        out += 1;
                    }
                    i = j;
                }
                bucket.truncate(out);
                self.dirty[r] = false;
            }
            if let Some(&index) = bucket.first() {
                return Some((r as u32, index));
            }
            self.occupied[w] &= !(1 << (r % 64));
        }
    }

    fn clear(&mut self) {
        for r in self.touched.drain(..) {
            let r = r as usize;
            self.buckets[r].clear();
            self.dirty[r] = false;
            self.occupied[r / 64] = 0;
        }
        self.cursor = usize::MAX;
    }
}

struct Rips<'a> {
    dm: &'a DistanceMatrix,
    /// Dense diameter rank of each edge, row-major; `u32::MAX` above the
    /// threshold.
    rank: Vec<u32>,
    rank_diam: Vec<f64>,
    /// Edges up to the threshold in filtration order.
    edges: Vec<Entry>,
}

impl<'a> Rips<'a> {
    fn new(dm: &'a DistanceMatrix, threshold: f64) -> Self {
        let n = dm.len();
        let mut edges = Vec::new();
        for i in 1..n {
            for j in 0..i {
                let d = dm.get(i, j);
                if d <= threshold {
                    edges.push(Entry {
                        diam: d,
                        rank: 0,
                        index: choose2(i as u64) + j as u64,
                    });
                }
            }
        }
        edges.sort_unstable_by(|a, b| {
            a.diam.total_cmp(&b.diam).then(b.index.cmp(&a.index))
        });
        let mut rank = vec![u32::MAX; n * n];
        let mut rank_diam: Vec<f64> = Vec::new();
        for e in &mut edges {
            if rank_diam.last() != Some(&e.diam) {
                rank_diam.push(e.diam);
            }
            e.rank = (rank_diam.len() - 1) as u32;
            let (i, j) = edge_vertices(e.index);
            rank[i * n + j] = e.rank;
            rank[j * n + i] = e.rank;
        }
        Self {
            dm,
            rank,
            rank_diam,
            edges,
        }
    }

    /// Union-find over edges in filtration order. Returns the finite and
    /// essential degree-0 bars, plus the non-merging edges in reverse
    /// filtration order (the columns for the degree-1 reduction).
    fn degree0(&self) -> (Vec<(f64, f64)>, Vec<Entry>) {
        let n = self.dm.len();
        let mut ds = DisjointSet::new(n);
        let mut bars = Vec::new();
        let mut columns = Vec::new();
        for &e in &self.edges {
            let (i, j) = edge_vertices(e.index);
            if ds.union(i, j) {
                if e.diam > 0.0 {
                    bars.push((0.0, e.diam));
                }
            } else {
                columns.push(e);
            }
        }
        for _ in 0..ds.components() {
            bars.push((0.0, f64::INFINITY));
        }
        columns.reverse();
        (bars, columns)
    }

    /// Cofacets of an edge within the threshold, in decreasing
    /// combinatorial index.
    #[inline]
    fn for_each_cofacet(&self, edge: Entry, mut f: impl FnMut(Entry) -> bool) {
        let (i, j) = edge_vertices(edge.index);
        let n = self.dm.len();
        let (ci3, ci2, cj2) = (choose3(i as u64), choose2(i as u64), choose2(j as u64));
        let row_i = &self.rank[i * n..(i + 1) * n];
        let row_j = &self.rank[j * n..(j + 1) * n];
        for v in (0..n).rev() {
            if v == i || v == j {
                continue;
            }
            let rank = edge.rank.max(row_i[v]).max(row_j[v]);
            if rank == u32::MAX {
                continue;
            }
            let v64 = v as u64;
            let index = if v > i {
                choose3(v64) + ci2 + j as u64
            } else if v > j {
                ci3 + choose2(v64) + j as u64
            } else {
                ci3 + cj2 + v64
            };
            let diam = self.rank_diam[rank as usize];
            if !f(Entry { diam, rank, index }) {
                return;
            }
        }
    }

    fn degree1(&self, columns: Vec<Entry>) -> Vec<(f64, f64)> {
        let mut bars = Vec::new();
        // triangle index -> position in `columns`
        let mut pivot_of = PivotMap::default();
        // additional edges summed into each paired column
        let mut reduction: Vec<Vec<Entry>> = vec![Vec::new(); columns.len()];
        let mut queue = BucketQueue::new(self.rank_diam.len());
        let mut working: Vec<Entry> = Vec::new();

        for (col, &edge) in columns.iter().enumerate() {
            queue.clear();
            working.clear();

            let mut pivot = self.init_column(edge, &pivot_of, &mut queue);
            loop {
                let Some(p) = pivot else {
                    bars.push((edge.diam, f64::INFINITY));
                    break;
                };
                let Some(&other) = pivot_of.get(&p.index) else {
                    if p.diam > edge.diam {
                        bars.push((edge.diam, p.diam));
                    }
                    pivot_of.insert(p.index, col);
                    reduction[col] = cancel_pairs(&mut working);
                    break;
                };
                working.push(columns[other]);
                working.extend_from_slice(&reduction[other]);
                for &e in std::iter::once(&columns[other]).chain(&reduction[other]) {
                    // Everything earlier than the current pivot cancels out.
                    self.for_each_cofacet(e, |c| {
                        if c <= p {
                            queue.push(c);
                        }
                        true
                    });
                }
                pivot = queue.peek().map(|(rank, index)| Entry {
                    diam: self.rank_diam[rank as usize],
                    rank,
                    index,
                });
            }
        }
        bars
    }

    /// Pivot of a fresh column: its earliest cofacet, or an emergent
    /// zero-persistence cofacet found before the scan completes. The queue
    /// is only filled when the pivot is already taken and the column has to
    /// be reduced.
    fn init_column(&self, edge: Entry, pivot_of: &PivotMap, queue: &mut BucketQueue) -> Option<Entry> {
        let mut check_emergent = true;
        let mut emergent = None;
        let mut best: Option<Entry> = None;
        self.for_each_cofacet(edge, |c| {
            if check_emergent && c.rank == edge.rank {
                if !pivot_of.contains_key(&c.index) {
                    emergent = Some(c);
                    return false;
                }
                check_emergent = false;
            }
            if best.is_none_or(|b| c > b) {
                best = Some(c);
            }
            true
        });
        if emergent.is_some() {
            return emergent;
        }
        let p = best?;
        if pivot_of.contains_key(&p.index) {
            self.for_each_cofacet(edge, |c| {
                queue.push(c);
                true
            });
        }
        Some(p)
    }
}

/// Edge `{i, j}` with `i > j` has index C(i,2) + j.
fn edge_vertices(index: u64) -> (usize, usize) {
    // largest i with C(i,2) <= index
    let mut i = (((8 * index + 1) as f64).sqrt() as u64 + 1) / 2;
    while choose2(i) > index {
        i -= 1;
    }
    while choose2(i + 1) <= index {
        i += 1;
    }
    (i as usize, (index - choose2(i)) as usize)
}

fn cancel_pairs(v: &mut Vec<Entry>) -> Vec<Entry> {
    v.sort_unstable_by_key(|e| e.index);
    let mut out = Vec::new();
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j < v.len() && v[j].index == v[i].index {
            j += 1;
        }
        if (j - i) % 2 == 1 {
            out.push(v[i]);
        }
        i = j;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(rows: &[&[f64]]) -> PointCloud {
        PointCloud::from_rows(rows).unwrap()
    }

    #[test]
    fn distance_matrix_basics() {
        let dm = distance_matrix(&cloud(&[&[0.0, 0.0], &[3.0, 4.0]])).unwrap();
        assert_eq!(dm.get(0, 1), 5.0);
        assert_eq!(dm.get(1, 0), 5.0);
        assert_eq!(dm.get(1, 1), 0.0);
        assert!(distance_matrix(&PointCloud::empty(2).unwrap()).is_err());
        assert!(DistanceMatrix::from_full(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
    }

    #[test]
    fn two_points() {
        let dm = distance_matrix(&cloud(&[&[0.0], &[2.0]])).unwrap();
        let d = vr_persistence(&dm, 1, f64::INFINITY).unwrap();
        assert_eq!(d[0].sorted_pairs(), vec![(0.0, 1.0), (0.0, f64::INFINITY)]);
        assert!(d[1].is_empty());
    }

    #[test]
    fn single_point() {
        let dm = distance_matrix(&cloud(&[&[0.3, 0.1]])).unwrap();
        let d = vr_persistence(&dm, 1, f64::INFINITY).unwrap();
        assert_eq!(d[0].pairs, vec![(0.0, f64::INFINITY)]);
        assert!(d[1].is_empty());
    }

    #[test]
    fn unit_square_loop() {
        let dm = distance_matrix(&cloud(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]])).unwrap();
        let d = vr_persistence(&dm, 1, f64::INFINITY).unwrap();
        assert_eq!(d[1].pairs, vec![(0.5, 2f64.sqrt() / 2.0)]);
        let d = vr_persistence_scaled(&dm, 1, f64::INFINITY, Scale::Dist).unwrap();
        assert_eq!(d[1].pairs, vec![(1.0, 2f64.sqrt())]);
        assert_eq!(d[0].len(), 4);
    }

    #[test]
    fn cap_leaves_loop_open() {
        let dm = distance_matrix(&cloud(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]])).unwrap();
        let d = vr_persistence(&dm, 1, 0.6).unwrap();
        assert_eq!(d[1].pairs, vec![(0.5, f64::INFINITY)]);
        let d = vr_persistence(&dm, 1, 0.4).unwrap();
        assert_eq!(d[0].essential().count(), 4);
    }

    #[test]
    fn hexagon_loop() {
        let pts: Vec<Vec<f64>> = (0..6)
            .map(|i| {
                let t = i as f64 * std::f64::consts::PI / 3.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let dm = distance_matrix(&PointCloud::from_rows(&pts).unwrap()).unwrap();
        let d = vr_persistence(&dm, 1, f64::INFINITY).unwrap();
        assert_eq!(d[1].len(), 1);
        let (b, e) = d[1].pairs[0];
        assert!((b - 0.5).abs() < 1e-12);
        assert!((e - 3f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn edge_index_round_trip() {
        for i in 1..300u64 {
            for j in 0..i {
                let (a, b) = edge_vertices(choose2(i) + j);
                assert_eq!((a as u64, b as u64), (i, j));
            }
        }
    }

    #[test]
    fn diagram_json_uses_inf_token() {
        let d = PersistenceDiagram::new(0, vec![(0.0, 0.5), (0.0, f64::INFINITY)]);
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"degree":0,"pairs":[[0.0,0.5],[0.0,"inf"]]}"#);
        let back: PersistenceDiagram = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<PersistenceDiagram>(r#"{"degree":0,"pairs":[[0.0,"nan"]]}"#).is_err());
    }

    #[test]
    fn rejects_bad_arguments() {
        let dm = distance_matrix(&cloud(&[&[0.0], &[1.0]])).unwrap();
        assert!(vr_persistence(&dm, 2, 1.0).is_err());
        assert!(vr_persistence(&dm, 1, 0.0).is_err());
    }
}
