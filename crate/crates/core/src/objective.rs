//! Smooth objectives and the tracking-error instance.

use nalgebra::{DVector, DVectorView};

use crate::problem::TrackingProblem;

/// A continuously differentiable function with Lipschitz gradient.
///
/// The solver only talks to this trait, so any smooth `f` can be minimized
/// over the sparse capped simplex, not just the tracking error.
pub trait SmoothObjective {
    /// Length of the argument vector.
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Value and gradient together; override when the two share work.
    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.value(x), self.gradient(x))
    }
}

impl<T: SmoothObjective + ?Sized> SmoothObjective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (**self).value_and_gradient(x)
    }
}

fn residual(problem: &TrackingProblem, x: &[f64]) -> DVector<f64> {
    assert_eq!(
        x.len(),
        problem.asset_count(),
        "weight vector length must equal the asset count"
    );
    problem.returns() * DVectorView::from_slice(x, x.len()) - problem.index_returns()
}

/// Tracking error `||y - R x||^2 / T`.
pub fn te_value(problem: &TrackingProblem, x: &[f64]) -> f64 {
    residual(problem, x).norm_squared() / problem.period_count() as f64
}

/// Gradient `(2 / T) R^T (R x - y)` of [`te_value`].
pub fn te_gradient(problem: &TrackingProblem, x: &[f64]) -> Vec<f64> {
    te_value_and_gradient(problem, x).1
}

fn te_value_and_gradient(problem: &TrackingProblem, x: &[f64]) -> (f64, Vec<f64>) {
    let t = problem.period_count() as f64;
    let r = residual(problem, x);
    let value = r.norm_squared() / t;
    let grad = problem.returns().tr_mul(&r) * (2.0 / t);
    (value, grad.data.into())
}

/// Lipschitz constant `(2 / T) * sigma_max(R)^2` of the tracking-error
/// gradient, with the top eigenvalue of `R^T R` obtained by power iteration.
///
/// The iteration runs until the Rayleigh quotient stalls to machine
/// precision; the result is then nudged up by a relative `1e-10` so it is
/// not an underestimate.
pub fn te_lipschitz_bound(problem: &TrackingProblem) -> f64 {
    let r = problem.returns();
    let n = problem.asset_count();
    // deterministic start with no special alignment to any axis
    let mut v = DVector::from_fn(n, |i, _| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_75).fract());
    v /= v.norm();

    let mut estimate = 0.0f64;
    for _ in 0..100_000 {
        let w = r.tr_mul(&(r * &v));
        let quotient = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            break;
        }
        v = w / norm;
        let settled = (quotient - estimate).abs() <= 1e-15 * quotient.abs();
        estimate = quotient;
        if settled {
            break;
        }
    }
    2.0 * estimate * (1.0 + 1e-10) / problem.period_count() as f64
}

impl SmoothObjective for TrackingProblem {
    fn dim(&self) -> usize {
        self.asset_count()
    }

    fn value(&self, x: &[f64]) -> f64 {
        te_value(self, x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        te_gradient(self, x)
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        te_value_and_gradient(self, x)
    }
}
