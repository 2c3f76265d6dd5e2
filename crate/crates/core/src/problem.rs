//! Domain types shared by the projection, the solver and the experiment harness.
//!
//! Everything here is immutable once constructed; constructors validate their
//! inputs so downstream code can rely on shapes and finiteness.

use std::fmt;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when checking `cap * cardinality >= 1`, so that caps such as
/// `1.0 / 49.0` (whose product with 49 rounds below one) are still accepted.
pub const BUDGET_SLACK: f64 = 1e-12;

/// Tolerance on `sum(x) == 1` used by [`Weights::check`].
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Tolerance on the box `0 <= x_i <= u` used by [`Weights::check`].
pub const BOX_TOLERANCE: f64 = 1e-12;

/// Sample data of an index-tracking instance: a `T x n` matrix of asset
/// returns and the `T` index returns it should replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingProblem {
    returns: DMatrix<f64>,
    index_returns: DVector<f64>,
}

impl TrackingProblem {
    pub fn new(returns: DMatrix<f64>, index_returns: DVector<f64>) -> Result<Self> {
        if returns.nrows() == 0 {
            return Err(Error::TooFewPeriods {
                required: 1,
                found: 0,
            });
        }
        if returns.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                field: "returns",
                expected: 1,
                found: 0,
            });
        }
        if index_returns.len() != returns.nrows() {
            return Err(Error::DimensionMismatch {
                field: "index_returns",
                expected: returns.nrows(),
                found: index_returns.len(),
            });
        }
        // column-major position is reported; it is stable for a given shape
        if let Some(index) = returns.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                field: "returns",
                index,
            });
        }
        if let Some(index) = index_returns.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                field: "index_returns",
                index,
            });
        }
        Ok(Self {
            returns,
            index_returns,
        })
    }

    /// Builds a problem from row-major period data.
    pub fn from_rows(rows: &[Vec<f64>], index_returns: &[f64]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != ncols) {
            return Err(Error::DimensionMismatch {
                field: "returns",
                expected: ncols,
                found: bad.len(),
            });
        }
        let returns = DMatrix::from_fn(rows.len(), ncols, |t, i| rows[t][i]);
        Self::new(returns, DVector::from_column_slice(index_returns))
    }

    pub fn returns(&self) -> &DMatrix<f64> {
        &self.returns
    }

    pub fn index_returns(&self) -> &DVector<f64> {
        &self.index_returns
    }

    /// Number of periods `T`.
    pub fn period_count(&self) -> usize {
        self.returns.nrows()
    }

    /// Number of assets `n`.
    pub fn asset_count(&self) -> usize {
        self.returns.ncols()
    }

    /// The sub-problem made of the periods in `rows`.
    pub fn periods(&self, rows: Range<usize>) -> Result<Self> {
        if rows.is_empty() || rows.end > self.period_count() {
            return Err(Error::TooFewPeriods {
                required: rows.end.max(rows.start + 1),
                found: self.period_count(),
            });
        }
        let len = rows.len();
        Self::new(
            self.returns.rows(rows.start, len).into_owned(),
            self.index_returns.rows(rows.start, len).into_owned(),
        )
    }
}

/// The feasible set `{x : sum x = 1, 0 <= x_i <= cap, ||x||_0 <= cardinality}`
/// in dimension `dimension`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseSimplexConstraint {
    cardinality: usize,
    cap: f64,
    dimension: usize,
}

impl SparseSimplexConstraint {
    pub fn new(cardinality: usize, cap: f64, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidConstraint {
                field: "dimension",
                reason: "must be positive".into(),
            });
        }
        if cardinality == 0 || cardinality > dimension {
            return Err(Error::InvalidConstraint {
                field: "cardinality",
                reason: format!("must lie in 1..={dimension}, got {cardinality}"),
            });
        }
        if !cap.is_finite() || cap <= 0.0 || cap > 1.0 {
            return Err(Error::InvalidConstraint {
                field: "cap",
                reason: format!("must lie in (0, 1], got {cap}"),
            });
        }
        let product = cap * cardinality as f64;
        if product < 1.0 - BUDGET_SLACK {
            return Err(Error::Infeasible {
                cap,
                cardinality,
                product,
            });
        }
        Ok(Self {
            cardinality,
            cap,
            dimension,
        })
    }

    /// Upper bound `r` on the number of nonzero weights.
    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    /// Per-asset upper bound `u`.
    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }
}

/// Checks that `constraint` applies to `problem`.
///
/// Shape and finiteness of the data are enforced by [`TrackingProblem::new`]
/// and the budget condition by [`SparseSimplexConstraint::new`]; this adds the
/// cross-check between the two.
pub fn validate_problem(
    problem: &TrackingProblem,
    constraint: &SparseSimplexConstraint,
) -> Result<()> {
    if constraint.dimension() != problem.asset_count() {
        return Err(Error::DimensionMismatch {
            field: "constraint.dimension",
            expected: problem.asset_count(),
            found: constraint.dimension(),
        });
    }
    Ok(())
}

/// Parameters of the nonmonotone projected gradient method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    /// Lower safeguard on the initial stepsize parameter.
    pub l_min: f64,
    /// Upper safeguard on the initial stepsize parameter.
    pub l_max: f64,
    /// Growth factor applied to `L` when the acceptance test fails.
    pub tau: f64,
    /// Sufficient-decrease constant.
    pub c: f64,
    /// Number of past objective values (besides the current one) the
    /// acceptance test compares against.
    pub memory: usize,
    /// Stop once the Euclidean norm of the iterate change is at most this.
    pub step_tol: f64,
    pub max_iter: usize,
    pub rng_seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            l_min: 1e-8,
            l_max: 1e8,
            tau: 2.0,
            c: 1e-4,
            memory: 3,
            step_tol: 1e-6,
            max_iter: 10_000,
            rng_seed: 0,
        }
    }
}

impl SolverParams {
    /// Defaults for data sets with several hundred assets or more.
    pub fn large_scale() -> Self {
        Self {
            memory: 5,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParams {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.l_min > 0.0 && self.l_min.is_finite()) {
            return bad("l_min", "must be a positive finite number");
        }
        if !(self.l_max > self.l_min && self.l_max.is_finite()) {
            return bad("l_max", "must be finite and exceed l_min");
        }
        if !(self.tau > 1.0 && self.tau.is_finite()) {
            return bad("tau", "must be finite and exceed 1");
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad("c", "must be a positive finite number");
        }
        if self.step_tol.is_nan() || self.step_tol <= 0.0 {
            return bad("step_tol", "must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter", "must be positive");
        }
        Ok(())
    }
}

/// Why a vector fails to lie in the sparse capped simplex.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityViolation {
    Length { expected: usize, found: usize },
    NonFinite { index: usize },
    Budget { sum: f64 },
    Bounds { index: usize, value: f64, cap: f64 },
    Cardinality { nonzeros: usize, limit: usize },
}

impl fmt::Display for FeasibilityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Length { expected, found } => {
                write!(f, "length {found}, expected {expected}")
            }
            Self::NonFinite { index } => write!(f, "entry {index} is not finite"),
            Self::Budget { sum } => write!(f, "weights sum to {sum}, not 1"),
            Self::Bounds { index, value, cap } => {
                write!(f, "entry {index} = {value} outside [0, {cap}]")
            }
            Self::Cardinality { nonzeros, limit } => {
                write!(f, "{nonzeros} nonzero entries exceed the limit {limit}")
            }
        }
    }
}

impl std::error::Error for FeasibilityViolation {}

/// Portfolio weights. Entries off the support are exact zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Weights(Vec<f64>);

impl Weights {
    /// Wraps raw values without checking; use [`Weights::check`] to validate
    /// against a constraint.
    pub fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of entries that are not exactly zero.
    pub fn nonzero_count(&self) -> usize {
        nonzero_count(&self.0)
    }

    /// Indices of the entries that are not exactly zero, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn check(&self, constraint: &SparseSimplexConstraint) -> Result<(), FeasibilityViolation> {
        check_feasible(&self.0, constraint)
    }
}

impl AsRef<[f64]> for Weights {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn nonzero_count(x: &[f64]) -> usize {
    x.iter().filter(|v| **v != 0.0).count()
}

/// The single feasibility predicate used by the solver, the harness and the
/// tests: budget within [`SUM_TOLERANCE`], box within [`BOX_TOLERANCE`],
/// and at most `cardinality` entries different from zero.
pub fn check_feasible(
    x: &[f64],
    constraint: &SparseSimplexConstraint,
) -> Result<(), FeasibilityViolation> {
    if x.len() != constraint.dimension() {
        return Err(FeasibilityViolation::Length {
            expected: constraint.dimension(),
            found: x.len(),
        });
    }
    if let Some(index) = x.iter().position(|v| !v.is_finite()) {
        return Err(FeasibilityViolation::NonFinite { index });
    }
    let cap = constraint.cap();
    if let Some((index, &value)) = x
        .iter()
        .enumerate()
        .find(|(_, v)| **v < -BOX_TOLERANCE || **v > cap + BOX_TOLERANCE)
    {
        return Err(FeasibilityViolation::Bounds { index, value, cap });
    }
    let nonzeros = nonzero_count(x);
    if nonzeros > constraint.cardinality() {
        return Err(FeasibilityViolation::Cardinality {
            nonzeros,
            limit: constraint.cardinality(),
        });
    }
    let sum: f64 = x.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(FeasibilityViolation::Budget { sum });
    }
    Ok(())
}
