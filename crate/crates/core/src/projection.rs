//! Euclidean projection onto the sparse capped simplex
//! `{x : sum x = 1, 0 <= x_i <= u, ||x||_0 <= r}`.
//!
//! The projection is closed-form: keep the `r` largest entries of the input,
//! shift them by a common multiplier `lambda` and clip each to `[0, u]`. The
//! multiplier is the root of the piecewise-linear, nondecreasing function
//!
//! ```text
//! h(lambda) = sum_i clip(a_i + lambda, 0, u) - 1
//! ```
//!
//! whose kinks sit at `-a_i` (entry `i` turns positive) and `-a_i + u`
//! (entry `i` reaches the cap). [`solve_capped_simplex_multiplier`] walks the
//! sorted kinks, carrying the value and slope of `h`, until it changes sign.

use crate::error::{Error, Result};
use crate::problem::{SparseSimplexConstraint, Weights, BUDGET_SLACK};

/// Bound on `|h(lambda)|` the multiplier solver aims for.
pub const MULTIPLIER_TOLERANCE: f64 = 1e-12;

/// Projection of `t` onto `[0, u]`.
#[inline]
pub fn clip_box(t: f64, u: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= u {
        u
    } else {
        t
    }
}

/// Indices of the `r` largest entries of `a`, returned in ascending order.
///
/// Ties are broken towards the smaller index. If `r >= a.len()` every index
/// is returned.
pub fn top_r_indices(a: &[f64], r: usize) -> Vec<usize> {
    let n = a.len();
    if r >= n {
        return (0..n).collect();
    }
    if r == 0 {
        return Vec::new();
    }
    // `+ 0.0` folds -0.0 into +0.0 so that total_cmp agrees with `==` on zeros
    let by_value_desc = |i: &usize, j: &usize| {
        (a[*j] + 0.0)
            .total_cmp(&(a[*i] + 0.0))
            .then_with(|| i.cmp(j))
    };
    let mut indices: Vec<usize> = (0..n).collect();
    indices.select_nth_unstable_by(r - 1, by_value_desc);
    indices.truncate(r);
    indices.sort_unstable();
    indices
}

/// Root of `h(lambda) = sum_i clip(a_i + lambda, 0, u) - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierSolution {
    pub lambda: f64,
    /// `h(lambda)` evaluated directly at the returned multiplier.
    pub residual: f64,
}

/// Evaluates `h(lambda)` directly.
pub fn multiplier_residual(a: &[f64], u: f64, lambda: f64) -> f64 {
    a.iter().map(|&ai| clip_box(ai + lambda, u)).sum::<f64>() - 1.0
}

/// Finds `lambda` with `sum_i clip(a_i + lambda, 0, u) = 1`.
///
/// Requires `a.len() * u >= 1`, otherwise no root exists. When `h` vanishes
/// on a whole interval the left end of that interval is returned.
pub fn solve_capped_simplex_multiplier(a: &[f64], u: f64) -> Result<MultiplierSolution> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::InvalidConstraint {
            field: "cap",
            reason: format!("must be positive and finite, got {u}"),
        });
    }
    let product = a.len() as f64 * u;
    if product < 1.0 - BUDGET_SLACK {
        return Err(Error::Infeasible {
            cap: u,
            cardinality: a.len(),
            product,
        });
    }
    if let Some(index) = a.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { field: "a", index });
    }

    // (position, slope change): +1 where an entry leaves 0, -1 where it hits u
    let mut kinks: Vec<(f64, i64)> = Vec::with_capacity(2 * a.len());
    for &ai in a {
        kinks.push((-ai, 1));
        kinks.push((-ai + u, -1));
    }
    kinks.sort_unstable_by(|x, y| x.0.total_cmp(&y.0));

    let mut lambda = sweep(&kinks);
    polish(a, u, &mut lambda);

    // a multiplier within rounding of zero means the input already satisfies
    // the budget; returning exactly zero makes feasible points fixed points
    if lambda != 0.0 && lambda.abs() <= 1e-14 {
        let at_zero = multiplier_residual(a, u, 0.0);
        if at_zero.abs() <= MULTIPLIER_TOLERANCE {
            lambda = 0.0;
        }
    }

    Ok(MultiplierSolution {
        lambda,
        residual: multiplier_residual(a, u, lambda),
    })
}

/// Walks the sorted kinks accumulating `h` and its slope; returns the first
/// point where `h` reaches zero.
fn sweep(kinks: &[(f64, i64)]) -> f64 {
    let mut slope: i64 = 0;
    let mut prev_point = kinks[0].0;
    let mut prev_value = -1.0;
    let mut i = 0;
    while i < kinks.len() {
        let point = kinks[i].0;
        let value = prev_value + slope as f64 * (point - prev_point);
        if value >= 0.0 {
            if value == 0.0 || slope == 0 {
                return point;
            }
            return prev_point - prev_value / slope as f64;
        }
        // merge coincident kinks
        let mut delta = 0;
        while i < kinks.len() && kinks[i].0 == point {
            delta += kinks[i].1;
            i += 1;
        }
        slope += delta;
        prev_point = point;
        prev_value = value;
    }
    // only reachable when a.len() * u == 1 up to rounding: every entry is
    // capped from the last kink on
    prev_point
}

/// One Newton step on the linear piece containing `lambda`, kept only if it
/// lowers `|h|`. Removes drift accumulated by the incremental sweep.
fn polish(a: &[f64], u: f64, lambda: &mut f64) {
    let mut value = -1.0;
    let mut active = 0usize;
    for &ai in a {
        let t = ai + *lambda;
        value += clip_box(t, u);
        if t > 0.0 && t < u {
            active += 1;
        }
    }
    if value == 0.0 || active == 0 {
        return;
    }
    let candidate = *lambda - value / active as f64;
    if multiplier_residual(a, u, candidate).abs() < value.abs() {
        *lambda = candidate;
    }
}

/// Projection together with the pieces that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseProjection {
    pub weights: Weights,
    /// Indices kept by the top-`r` selection, ascending.
    pub support: Vec<usize>,
    pub multiplier: MultiplierSolution,
}

/// Closest point to `a` in the sparse capped simplex described by `constraint`.
pub fn project_sparse_capped_simplex(
    a: &[f64],
    constraint: &SparseSimplexConstraint,
) -> Result<Weights> {
    project_detailed(a, constraint).map(|p| p.weights)
}

/// As [`project_sparse_capped_simplex`], also returning the kept index set
/// and the multiplier.
pub fn project_detailed(
    a: &[f64],
    constraint: &SparseSimplexConstraint,
) -> Result<SparseProjection> {
    let n = constraint.dimension();
    if a.len() != n {
        return Err(Error::DimensionMismatch {
            field: "a",
            expected: n,
            found: a.len(),
        });
    }
    if let Some(index) = a.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { field: "a", index });
    }
    let u = constraint.cap();
    let support = top_r_indices(a, constraint.cardinality());
    let kept: Vec<f64> = support.iter().map(|&i| a[i]).collect();
    let multiplier = solve_capped_simplex_multiplier(&kept, u)?;

    let mut x = vec![0.0; n];
    for (&i, &ai) in support.iter().zip(&kept) {
        x[i] = clip_box(ai + multiplier.lambda, u);
    }
    Ok(SparseProjection {
        weights: Weights::from_vec(x),
        support,
        multiplier,
    })
}
