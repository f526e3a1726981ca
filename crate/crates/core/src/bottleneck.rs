//! Exact bottleneck distance between persistence diagrams.
//!
//! Finite bars are matched through the usual bipartite reduction: each
//! diagram gets one diagonal copy per bar of the other diagram, and a
//! perfect matching whose largest edge is at most `t` exists iff
//! `d_B <= t`. The answer is one of finitely many edge costs, found by
//! binary search with a maximum-matching feasibility test. Essential bars
//! are matched separately by birth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persistence::PersistenceDiagram;

/// `d_∞` between two bars, or between a bar and the empty interval (`None`).
pub fn interval_inf_dist(a: (f64, f64), b: Option<(f64, f64)>) -> f64 {
    match b {
        None => {
            if a.1.is_infinite() {
                f64::INFINITY
            } else {
                (a.1 - a.0) / 2.0
            }
        }
        Some(b) => {
            let birth = (a.0 - b.0).abs();
            let death = match (a.1.is_infinite(), b.1.is_infinite()) {
                (true, true) => 0.0,
                (false, false) => (a.1 - b.1).abs(),
                _ => f64::INFINITY,
            };
            birth.max(death)
        }
    }
}

/// An optimal partial bijection between the bars of two diagrams; bars not
/// listed in `pairs` are matched to the empty interval.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_a: Vec<usize>,
    pub unmatched_b: Vec<usize>,
}

pub fn bottleneck_distance(a: &PersistenceDiagram, b: &PersistenceDiagram) -> Result<f64> {
    Ok(bottleneck_matching(a, b)?.0)
}

/// Bottleneck distance together with a matching attaining it. When the
/// essential bar counts differ the distance is `+∞` and the matching pairs
/// as many essential bars as possible.
pub fn bottleneck_matching(
    a: &PersistenceDiagram,
    b: &PersistenceDiagram,
) -> Result<(f64, Matching)> {
    if a.degree != b.degree {
        return Err(Error::DegreeMismatch(a.degree, b.degree));
    }
    let split = |d: &PersistenceDiagram| {
        let mut fin = Vec::new();
        let mut ess = Vec::new();
        for (i, &(s, e)) in d.pairs.iter().enumerate() {
            if e.is_infinite() {
                ess.push((s, i));
            } else {
                fin.push(i);
            }
        }
        (fin, ess)
    };
    let (fin_a, mut ess_a) = split(a);
    let (fin_b, mut ess_b) = split(b);

    let mut matching = Matching::default();

    // Essential bars: sorted-by-birth pairing is optimal for the max cost.
    ess_a.sort_by(|x, y| x.0.total_cmp(&y.0));
    ess_b.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut cost = 0.0f64;
    for (x, y) in ess_a.iter().zip(&ess_b) {
        cost = cost.max((x.0 - y.0).abs());
        matching.pairs.push((x.1, y.1));
    }
    if ess_a.len() != ess_b.len() {
        cost = f64::INFINITY;
        matching.unmatched_a.extend(ess_a.iter().skip(ess_b.len()).map(|x| x.1));
        matching.unmatched_b.extend(ess_b.iter().skip(ess_a.len()).map(|x| x.1));
    }

    let pa: Vec<(f64, f64)> = fin_a.iter().map(|&i| a.pairs[i]).collect();
    let pb: Vec<(f64, f64)> = fin_b.iter().map(|&i| b.pairs[i]).collect();
    let (fin_cost, assignment) = finite_bottleneck(&pa, &pb);
    cost = cost.max(fin_cost);

    let mut b_used = vec![false; pb.len()];
    for (ia, slot) in assignment.iter().enumerate() {
        match slot {
            Some(ib) => {
                b_used[*ib] = true;
                matching.pairs.push((fin_a[ia], fin_b[*ib]));
            }
            None => matching.unmatched_a.push(fin_a[ia]),
        }
    }
    for (ib, used) in b_used.into_iter().enumerate() {
        if !used {
            matching.unmatched_b.push(fin_b[ib]);
        }
    }
    Ok((cost, matching))
}

/// Cost graph on `n + m` left and right vertices. Left: bars of A, then
/// diagonal copies of B's bars. Right: bars of B, then diagonal copies of
/// A's bars.
struct CostGraph<'a> {
    a: &'a [(f64, f64)],
    b: &'a [(f64, f64)],
}

impl CostGraph<'_> {
    fn size(&self) -> usize {
        self.a.len() + self.b.len()
    }

    fn cost(&self, l: usize, r: usize) -> Option<f64> {
        let (n, m) = (self.a.len(), self.b.len());
        match (l < n, r < m) {
            (true, true) => Some(interval_inf_dist(self.a[l], Some(self.b[r]))),
            // A bar to its own diagonal copy.
            (true, false) => (r - m == l).then(|| interval_inf_dist(self.a[l], None)),
            (false, true) => (l - n == r).then(|| interval_inf_dist(self.b[r], None)),
            (false, false) => Some(0.0),
        }
    }

    fn adjacency(&self, t: f64) -> Vec<Vec<usize>> {
        let s = self.size();
        (0..s)
            .map(|l| {
                (0..s)
                    .filter(|&r| self.cost(l, r).is_some_and(|c| c <= t))
                    .collect()
            })
            .collect()
    }
}

/// Returns the bottleneck cost of finite diagrams and, for each bar of `a`,
/// the matched bar of `b` (or `None` for the diagonal).
fn finite_bottleneck(a: &[(f64, f64)], b: &[(f64, f64)]) -> (f64, Vec<Option<usize>>) {
    let g = CostGraph { a, b };
    let s = g.size();
    if s == 0 {
        return (0.0, Vec::new());
    }
    let mut candidates: Vec<f64> = Vec::with_capacity(s * 2 + a.len() * b.len());
    candidates.push(0.0);
    for &x in a {
        candidates.push(interval_inf_dist(x, None));
        for &y in b {
            candidates.push(interval_inf_dist(x, Some(y)));
        }
    }
    for &y in b {
        candidates.push(interval_inf_dist(y, None));
    }
    candidates.sort_by(|x, y| x.total_cmp(y));
    candidates.dedup();

    // Matching every bar to the diagonal is always feasible at the largest
    // half-persistence, so the last candidate is feasible.
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    let mut best = max_matching(&g.adjacency(candidates[hi]), s);
    while lo < hi {
        let mid = (lo + hi) / 2;
        let m = max_matching(&g.adjacency(candidates[mid]), s);
        if m.iter().all(Option::is_some) {
            hi = mid;
            best = m;
        } else {
            lo = mid + 1;
        }
    }
    let assignment = (0..a.len())
        .map(|l| best[l].filter(|&r| r < b.len()))
        .collect();
    (candidates[hi], assignment)
}

/// Hopcroft–Karp maximum matching; `result[l]` is the right vertex matched
/// to left vertex `l`.
fn max_matching(adj: &[Vec<usize>], right: usize) -> Vec<Option<usize>> {
    const INF: usize = usize::MAX;
    let left = adj.len();
    let mut match_l: Vec<Option<usize>> = vec![None; left];
    let mut match_r: Vec<Option<usize>> = vec![None; right];
    let mut dist = vec![INF; left];
    loop {
        // BFS layering from free left vertices
        let mut queue = std::collections::VecDeque::new();
        for l in 0..left {
            if match_l[l].is_none() {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = INF;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in &adj[l] {
                match match_r[r] {
                    None => found = true,
                    Some(l2) if dist[l2] == INF => {
                        dist[l2] = dist[l] + 1;
                        queue.push_back(l2);
                    }
                    _ => {}
                }
            }
        }
        if !found {
            break;
        }
        let mut progress = false;
        for l in 0..left {
            if match_l[l].is_none() && augment(l, adj, &mut match_l, &mut match_r, &mut dist) {
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }
    match_l
}

fn augment(
    l: usize,
    adj: &[Vec<usize>],
    match_l: &mut [Option<usize>],
    match_r: &mut [Option<usize>],
    dist: &mut [usize],
) -> bool {
    for &r in &adj[l] {
        let ok = match match_r[r] {
            None => true,
            Some(l2) => dist[l2] == dist[l] + 1 && augment(l2, adj, match_l, match_r, dist),
        };
        if ok {
            match_l[l] = Some(r);
            match_r[r] = Some(l);
            return true;
        }
    }
    dist[l] = usize::MAX;
    false
}
