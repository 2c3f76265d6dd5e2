//! Independent oracles and instance generators shared by the integration
//! tests. Nothing here calls into the projection or the solver.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sparse_track::TrackingProblem;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `sum_i min(max(a_i + lambda, 0), u) - 1`, written out independently.
pub fn budget_gap(a: &[f64], u: f64, lambda: f64) -> f64 {
    a.iter().map(|&v| (v + lambda).max(0.0).min(u)).sum::<f64>() - 1.0
}

/// Capped-simplex projection of `a` by bisection on the multiplier.
pub fn capped_simplex_by_bisection(a: &[f64], u: f64) -> Vec<f64> {
    let max = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = a.iter().copied().fold(f64::INFINITY, f64::min);
    // below: every entry clipped to zero; above: every entry at the cap
    let (mut lo, mut hi) = (-max - 1.0, -min + u + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if budget_gap(a, u, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    a.iter().map(|&v| (v + lambda).max(0.0).min(u)).collect()
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Minimum of `||x - a||^2` over the sparse capped simplex, by enumerating
/// every support of size `min(r, n)` and projecting onto each restricted
/// capped simplex. Supports smaller than `r` are covered because their
/// solutions are feasible for any superset.
pub fn sparse_projection_distance_oracle(a: &[f64], r: usize, u: f64) -> f64 {
    let n = a.len();
    let k = r.min(n);
    let mut best = f64::INFINITY;
    for support in subsets(n, k) {
        let sub: Vec<f64> = support.iter().map(|&i| a[i]).collect();
        let x = capped_simplex_by_bisection(&sub, u);
        let mut dist: f64 = sub.iter().zip(&x).map(|(p, q)| (p - q) * (p - q)).sum();
        dist += (0..n)
            .filter(|i| !support.contains(i))
            .map(|i| a[i] * a[i])
            .sum::<f64>();
        best = best.min(dist);
    }
    best
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Central finite-difference gradient.
pub fn finite_difference_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Tracking error evaluated with explicit loops over periods and assets.
pub fn tracking_error_by_loops(rows: &DMatrix<f64>, y: &DVector<f64>, x: &[f64]) -> f64 {
    let t = rows.nrows();
    let mut total = 0.0;
    for p in 0..t {
        let mut portfolio = 0.0;
        for (i, xi) in x.iter().enumerate() {
            portfolio += rows[(p, i)] * xi;
        }
        total += (y[p] - portfolio).powi(2);
    }
    total / t as f64
}

/// Random feasible `r`-sparse weights with cap `u`, built without the
/// library: fill a random support with uniform mass, then move the excess
/// above the cap to uncapped entries.
pub fn planted_weights(rng: &mut impl Rng, n: usize, r: usize, u: f64) -> Vec<f64> {
    assert!(u * r as f64 >= 1.0);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..r {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    let support = &idx[..r];
    let mut w: Vec<f64> = (0..r).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    for _ in 0..100 {
        let excess: f64 = w.iter().map(|v| (v - u).max(0.0)).sum();
        if excess <= 0.0 {
            break;
        }
        w.iter_mut().for_each(|v| *v = v.min(u));
        let free = w.iter().filter(|v| **v < u).count();
        w.iter_mut()
            .filter(|v| **v < u)
            .for_each(|v| *v += excess / free as f64);
    }
    let mut x = vec![0.0; n];
    for (&i, &v) in support.iter().zip(&w) {
        x[i] = v;
    }
    x
}

/// Gaussian returns with a common market factor, `T x n`.
pub fn factor_returns(rng: &mut impl Rng, t: usize, n: usize) -> DMatrix<f64> {
    let market = Normal::new(0.002, 0.02).unwrap();
    let idio = Normal::new(0.0, 0.015).unwrap();
    let factor: Vec<f64> = (0..t).map(|_| market.sample(rng)).collect();
    let betas: Vec<f64> = (0..n).map(|_| rng.random_range(0.6..1.4)).collect();
    DMatrix::from_fn(t, n, |p, i| betas[i] * factor[p] + idio.sample(rng))
}

/// Standard Gaussian `T x n` matrix.
pub fn gaussian_matrix(rng: &mut impl Rng, t: usize, n: usize) -> DMatrix<f64> {
    let g = Normal::new(0.0, 1.0).unwrap();
    DMatrix::from_fn(t, n, |_, _| g.sample(rng))
}

/// Index = planted portfolio of the assets, so the optimum is zero.
pub fn planted_problem(returns: DMatrix<f64>, x: &[f64]) -> TrackingProblem {
    let y = &returns * DVector::from_column_slice(x);
    TrackingProblem::new(returns, y).unwrap()
}

/// Index built as a market-cap-like mix of all assets plus tracking noise.
pub fn synthetic_index_problem(rng: &mut impl Rng, t: usize, n: usize) -> TrackingProblem {
    let returns = factor_returns(rng, t, n);
    let caps: Vec<f64> = (0..n).map(|_| rng.random_range(0.5f64..5.0).powi(2)).collect();
    let total: f64 = caps.iter().sum();
    let weights = DVector::from_iterator(n, caps.iter().map(|c| c / total));
    let noise = Normal::new(0.0, 0.001).unwrap();
    let y = &returns * weights + DVector::from_fn(t, |_, _| noise.sample(rng));
    TrackingProblem::new(returns, y).unwrap()
}
