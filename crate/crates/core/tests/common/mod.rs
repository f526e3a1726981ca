//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;

use rcla::PersistenceDiagram;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Vietoris–Rips diagrams in degrees 0 and 1 (ε units) by reducing the full
/// boundary matrix of the 2-skeleton. Simplices are ordered by filtration
/// value, then dimension, then vertex list.
pub fn naive_persistence(points: &[Vec<f64>]) -> [Vec<(f64, f64)>; 2] {
    let n = points.len();
    let d = |i: usize, j: usize| dist(&points[i], &points[j]) / 2.0;
    let mut simplices: Vec<(f64, Vec<usize>)> = (0..n).map(|i| (0.0, vec![i])).collect();
    for i in 0..n {
        for j in i + 1..n {
            simplices.push((d(i, j), vec![i, j]));
            for k in j + 1..n {
                simplices.push((d(i, j).max(d(i, k)).max(d(j, k)), vec![i, j, k]));
            }
        }
    }
    simplices.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.len().cmp(&b.1.len()))
            .then(a.1.cmp(&b.1))
    });
    let position = |s: &[usize]| simplices.iter().position(|t| t.1 == s).unwrap();
    let mut columns: Vec<Vec<usize>> = simplices
        .iter()
        .map(|(_, s)| {
            let mut col: Vec<usize> = if s.len() == 1 {
                Vec::new()
            } else {
                (0..s.len())
                    .map(|drop| {
                        let face: Vec<usize> = s
                            .iter()
                            .enumerate()
                            .filter(|&(i, _)| i != drop)
                            .map(|(_, &v)| v)
                            .collect();
                        position(&face)
                    })
                    .collect()
            };
            col.sort_unstable();
            col
        })
        .collect();

    let mut low_owner: Vec<Option<usize>> = vec![None; simplices.len()];
    for j in 0..columns.len() {
        while let Some(&low) = columns[j].last() {
            match low_owner[low] {
                Some(other) => {
                    let mut sum = Vec::new();
                    let (a, b) = (&columns[j], &columns[other]);
                    let (mut x, mut y) = (0, 0);
                    while x < a.len() || y < b.len() {
                        if y == b.len() || (x < a.len() && a[x] < b[y]) {
                            sum.push(a[x]);
                            x += 1;
                        } else if x == a.len() || b[y] < a[x] {
                            sum.push(b[y]);
                            y += 1;
                        } else {
                            x += 1;
                            y += 1;
                        }
                    }
                    columns[j] = sum;
                }
                None => {
                    low_owner[low] = Some(j);
                    break;
                }
            }
        }
    }

    let mut out: [Vec<(f64, f64)>; 2] = [Vec::new(), Vec::new()];
    for (i, (value, s)) in simplices.iter().enumerate() {
        let dim = s.len() - 1;
        if dim > 1 || !columns[i].is_empty() {
            continue;
        }
        match low_owner[i] {
            Some(j) => {
                let death = simplices[j].0;
                if death > *value {
                    out[dim].push((*value, death));
                }
            }
            None => out[dim].push((*value, f64::INFINITY)),
        }
    }
    for d in &mut out {
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    }
    out
}

/// Whether two sorted bar lists agree pairwise within `tol`.
pub fn same_bars(a: &[(f64, f64)], b: &[(f64, f64)], tol: f64) -> bool {
    let close = |x: f64, y: f64| (x == y) || (x - y).abs() <= tol;
    a.len() == b.len() && a.iter().zip(b).all(|(p, q)| close(p.0, q.0) && close(p.1, q.1))
}

fn linf(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

fn to_diagonal(a: (f64, f64)) -> f64 {
    (a.1 - a.0) / 2.0
}

/// Bottleneck distance between finite diagrams by trying every partial
/// matching.
pub fn exhaustive_bottleneck(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    fn go(i: usize, a: &[(f64, f64)], b: &[(f64, f64)], used: &mut Vec<bool>, cost: f64, best: &mut f64) {
        if cost >= *best {
            return;
        }
        if i == a.len() {
            let rest = b
                .iter()
                .zip(used.iter())
                .filter(|(_, &u)| !u)
                .map(|(&q, _)| to_diagonal(q))
                .fold(cost, f64::max);
            *best = best.min(rest);
            return;
        }
        go(i + 1, a, b, used, cost.max(to_diagonal(a[i])), best);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                go(i + 1, a, b, used, cost.max(linf(a[i], b[j])), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(0, a, b, &mut vec![false; b.len()], 0.0, &mut best);
    best
}

pub fn random_diagram<R: Rng>(rng: &mut R, max_len: usize, degree: usize) -> PersistenceDiagram {
    let len = rng.random_range(0..=max_len);
    let coarse = rng.random_bool(0.3);
    let pairs = (0..len)
        .map(|_| {
            let mut b: f64 = rng.random_range(0.0..1.0);
            let mut l: f64 = rng.random_range(0.0..1.0);
            if coarse {
                b = (b * 5.0).round() / 5.0;
                l = (l * 5.0).round() / 5.0;
            }
            (b, b + l)
        })
        .collect();
    PersistenceDiagram::new(degree, pairs)
}

const FIXED_BITS: u64 = 320;

/// Poisson cdf P(Pois(μ) ≤ r) for μ = `numer / 1024`, computed in 320-bit
/// fixed point from the exact series.
pub fn big_pois_cdf(numer: u64, r: u64) -> f64 {
    let one = BigUint::from(1u8) << FIXED_BITS;
    let mu = BigUint::from(numer) << (FIXED_BITS - 10);
    let mut term = one.clone();
    let mut total = BigUint::zero();
    let mut partial = BigUint::zero();
    let mut i = 0u64;
    while !term.is_zero() {
        if i <= r {
            partial += &term;
        }
        total += &term;
        i += 1;
        term = (term * &mu >> FIXED_BITS) / i;
    }
    let ratio = (partial << FIXED_BITS) / total;
    // keep 64 significant bits before converting
    let bits = ratio.bits();
    let shift = bits.saturating_sub(64);
    let mantissa = (ratio >> shift).to_f64().unwrap();
    mantissa * 2f64.powi(shift as i32 - FIXED_BITS as i32)
}
