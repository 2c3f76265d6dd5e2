use std::path::PathBuf;

use thiserror::Error;

use crate::problem::FeasibilityViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in `{field}`: expected {expected}, found {found}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in `{field}` at position {index}")]
    NonFinite { field: &'static str, index: usize },

    #[error(
        "infeasible constraint: cap {cap} x cardinality {cardinality} = {product} is below the budget 1"
    )]
    Infeasible {
        cap: f64,
        cardinality: usize,
        product: f64,
    },

    #[error("invalid constraint field `{field}`: {reason}")]
    InvalidConstraint { field: &'static str, reason: String },

    #[error("invalid solver parameter `{name}`: {reason}")]
    InvalidParams { name: &'static str, reason: String },

    #[error("starting point is not feasible: {0}")]
    InfeasibleStart(FeasibilityViolation),

    #[error("Barzilai-Borwein quotient needs a nonzero step")]
    ZeroStep,

    #[error("non-finite {quantity} encountered at outer iteration {iteration}")]
    SolverNonFinite {
        quantity: &'static str,
        iteration: usize,
    },

    #[error("stepsize parameter overflowed at outer iteration {iteration} after {inner} inner trials")]
    StepsizeOverflow { iteration: usize, inner: usize },

    #[error("superiority is undefined when the reference out-of-sample error is zero")]
    ZeroReference,

    #[error("need at least {required} return periods, found {found}")]
    TooFewPeriods { required: usize, found: usize },

    #[error("non-positive price {value} in {series} at row {row}")]
    NonPositivePrice {
        series: String,
        row: usize,
        value: f64,
    },

    #[error("{path}: {location}: {message}")]
    Parse {
        path: PathBuf,
        location: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
