//! Sparse index tracking.
//!
//! Finds long-only portfolios with at most `r` holdings, each capped at `u`,
//! that track an index as closely as possible in mean squared error:
//!
//! ```text
//! minimize    ||y - R x||^2 / T
//! subject to  sum x = 1,  0 <= x_i <= u,  ||x||_0 <= r
//! ```
//!
//! The pieces:
//!
//! * [`projection`]: exact Euclidean projection onto the feasible set above.
//! * [`objective`]: the [`SmoothObjective`] trait and the tracking error.
//! * [`solver`]: the nonmonotone projected gradient method, generic over any
//!   smooth objective.
//! * [`experiments`]: price ingestion, train/test evaluation and result tables.
//!
//! ```
//! use sparse_track::{npg_solve, random_feasible_point, SolverParams, SparseSimplexConstraint, TrackingProblem};
//!
//! // three periods, three assets; the index is an equal mix of the first two
//! let problem = TrackingProblem::from_rows(
//!     &[vec![0.02, 0.00, 0.01], vec![-0.01, 0.03, 0.00], vec![0.01, 0.01, -0.02]],
//!     &[0.01, 0.01, 0.01],
//! )?;
//! let constraint = SparseSimplexConstraint::new(2, 1.0, 3)?;
//! let x0 = random_feasible_point(&constraint, 1);
//! let result = npg_solve(&problem, &constraint, &SolverParams::default(), x0.as_slice())?;
//! assert!(result.weights.nonzero_count() <= 2);
//! assert!(result.final_objective() < 1e-8);
//! # Ok::<(), sparse_track::Error>(())
//! ```

pub mod error;
pub mod experiments;
pub mod objective;
pub mod problem;
pub mod projection;
pub mod solver;

pub use error::{Error, Result};
pub use objective::{te_gradient, te_lipschitz_bound, te_value, SmoothObjective};
pub use problem::{
    check_feasible, validate_problem, FeasibilityViolation, SolverParams, SparseSimplexConstraint,
    TrackingProblem, Weights,
};
pub use projection::{
    clip_box, project_sparse_capped_simplex, solve_capped_simplex_multiplier, top_r_indices,
    MultiplierSolution,
};
pub use solver::{npg_solve, random_feasible_point, NpgState, SolveResult, Status};

// The guide's Rust snippets run as doctests so the book cannot drift from
// the code.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/tracking-problem.md")]
    mod tracking_problem {}
    #[doc = include_str!("../../../book/src/projection.md")]
    mod projection {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/file-formats.md")]
    mod file_formats {}
}
