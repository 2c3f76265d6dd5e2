//! Nonmonotone projected gradient method over the sparse capped simplex.
//!
//! Each outer iteration picks an initial stepsize parameter `L` from the
//! Barzilai-Borwein quotient of the last step, then repeatedly
//!
//! 1. forms the candidate `P(x_k - grad f(x_k) / L)`,
//! 2. accepts it if `f(candidate) <= max(f over the last M+1 iterates)
//!    - (c / 2) ||candidate - x_k||^2`,
//! 3. otherwise multiplies `L` by `tau` and retries.
//!
//! The run stops when the accepted step is shorter than `step_tol` or after
//! `max_iter` outer iterations. The acceptance test compares against a
//! window of past values, so individual iterates may increase `f`; the
//! windowed maximum never does.

use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::SmoothObjective;
use crate::problem::{check_feasible, SolverParams, SparseSimplexConstraint, Weights};
use crate::projection::project_sparse_capped_simplex;

/// Initial `L` used on the first outer iteration, before any step exists.
pub const FIRST_STEPSIZE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    ConvergedStepTol,
    MaxIterReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub weights: Weights,
    /// `f(x_k)` for every iterate, starting with `f(x_0)`.
    pub objective_trace: Vec<f64>,
    /// Number of stepsize trials in each outer iteration.
    pub inner_counts: Vec<usize>,
    /// `||x_{k+1} - x_k||` for each accepted step.
    pub step_norms: Vec<f64>,
    pub status: Status,
    /// `||x - P(x - grad f(x) / L)||` at the returned point, with `L` the
    /// last accepted stepsize parameter.
    pub stationarity_residual: f64,
    pub final_l: f64,
}

impl SolveResult {
    pub fn iterations(&self) -> usize {
        self.inner_counts.len()
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds f(x_0)")
    }
}

/// `max(f(x_i))` over the window `[k - memory, k]` for every `k`.
pub fn windowed_max(trace: &[f64], memory: usize) -> Vec<f64> {
    (0..trace.len())
        .map(|k| {
            trace[k.saturating_sub(memory)..=k]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Barzilai-Borwein quotient `s.y / s.s`, clamped to `[l_min, l_max]`.
pub fn bb_initial_stepsize(s: &[f64], y: &[f64], l_min: f64, l_max: f64) -> Result<f64> {
    let ss: f64 = s.iter().map(|v| v * v).sum();
    if ss == 0.0 {
        return Err(Error::ZeroStep);
    }
    let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok((sy / ss).clamp(l_min, l_max))
}

/// Nonmonotone sufficient-decrease test against the window `history`.
pub fn nonmonotone_accept(f_new: f64, history: &[f64], c: f64, step_sq_norm: f64) -> bool {
    let reference = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    f_new <= reference - 0.5 * c * step_sq_norm
}

/// Minimizer of the linearized model `grad.(x - x_k) + (L/2) ||x - x_k||^2`
/// over the feasible set, i.e. `P(x_k - grad / L)`.
pub fn npg_step_candidate(
    x_k: &[f64],
    grad: &[f64],
    l_k: f64,
    constraint: &SparseSimplexConstraint,
) -> Result<Weights> {
    let target: Vec<f64> = x_k.iter().zip(grad).map(|(x, g)| x - g / l_k).collect();
    project_sparse_capped_simplex(&target, constraint)
}

/// `||x - P(x - grad / l)||`; zero exactly at fixed points of the projected
/// gradient map.
pub fn stationarity_residual(
    x: &[f64],
    grad: &[f64],
    l: f64,
    constraint: &SparseSimplexConstraint,
) -> Result<f64> {
    let p = npg_step_candidate(x, grad, l, constraint)?;
    Ok(distance_sq(x, p.as_slice()).sqrt())
}

/// Worst-case number of stepsize trials in one outer iteration for an
/// objective whose gradient is `l_f`-Lipschitz.
pub fn inner_iteration_bound(l_f: f64, c: f64, l_min: f64, tau: f64) -> usize {
    let trials = ((l_f + c).ln() - l_min.ln()) / tau.ln() + 1.0;
    (trials.floor().max(1.0)) as usize
}

/// Random point of the feasible set: a uniformly random support of size `r`
/// carrying uniform simplex weights, projected to respect the cap.
/// Deterministic in `seed`.
pub fn random_feasible_point(constraint: &SparseSimplexConstraint, seed: u64) -> Weights {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = constraint.dimension();
    let support = sample(&mut rng, n, constraint.cardinality());
    let mut raw = vec![0.0; n];
    let mut total = 0.0;
    for i in support.iter() {
        // strictly positive so the support survives the projection
        let draw: f64 = rng.sample::<f64, _>(Exp1) + f64::MIN_POSITIVE;
        raw[i] = draw;
        total += draw;
    }
    raw.iter_mut().for_each(|v| *v /= total);
    project_sparse_capped_simplex(&raw, constraint)
        .expect("a validated constraint admits a projection")
}

fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Summary of one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterStep {
    pub inner_count: usize,
    /// Accepted stepsize parameter.
    pub l: f64,
    pub step_norm: f64,
    pub objective: f64,
}

/// Iteration state of the method; drive it with [`NpgState::step`] or let
/// [`npg_solve`] do it.
#[derive(Debug, Clone)]
pub struct NpgState<O> {
    objective: O,
    constraint: SparseSimplexConstraint,
    params: SolverParams,
    current: Vec<f64>,
    previous: Option<Vec<f64>>,
    grad: Vec<f64>,
    previous_grad: Option<Vec<f64>>,
    f_current: f64,
    history: VecDeque<f64>,
    iteration: usize,
    last_l: f64,
}

impl<O: SmoothObjective> NpgState<O> {
    pub fn new(
        objective: O,
        constraint: SparseSimplexConstraint,
        params: SolverParams,
        x0: &[f64],
    ) -> Result<Self> {
        params.validate()?;
        if objective.dim() != constraint.dimension() {
            return Err(Error::DimensionMismatch {
                field: "constraint.dimension",
                expected: objective.dim(),
                found: constraint.dimension(),
            });
        }
        check_feasible(x0, &constraint).map_err(Error::InfeasibleStart)?;
        let (f0, g0) = objective.value_and_gradient(x0);
        check_finite(f0, &g0, 0)?;
        let mut history = VecDeque::with_capacity(params.memory + 1);
        history.push_back(f0);
        Ok(Self {
            objective,
            constraint,
            params,
            current: x0.to_vec(),
            previous: None,
            grad: g0,
            previous_grad: None,
            f_current: f0,
            history,
            iteration: 0,
            last_l: FIRST_STEPSIZE.clamp(params.l_min, params.l_max),
        })
    }

    pub fn current(&self) -> &[f64] {
        &self.current
    }

    pub fn previous(&self) -> Option<&[f64]> {
        self.previous.as_deref()
    }

    pub fn objective_value(&self) -> f64 {
        self.f_current
    }

    pub fn gradient(&self) -> &[f64] {
        &self.grad
    }

    /// Objective values of the last `min(k + 1, M + 1)` iterates, oldest first.
    pub fn history(&self) -> &VecDeque<f64> {
        &self.history
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Stepsize parameter accepted in the most recent outer iteration.
    pub fn last_l(&self) -> f64 {
        self.last_l
    }

    fn initial_l(&self) -> f64 {
        let (Some(prev), Some(prev_grad)) = (&self.previous, &self.previous_grad) else {
            return FIRST_STEPSIZE.clamp(self.params.l_min, self.params.l_max);
        };
        let s: Vec<f64> = self.current.iter().zip(prev).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = self.grad.iter().zip(prev_grad).map(|(a, b)| a - b).collect();
        // a zero step ends the run before the next BB quotient is needed
        bb_initial_stepsize(&s, &y, self.params.l_min, self.params.l_max)
            .unwrap_or(self.params.l_min)
    }

    /// Runs one outer iteration and moves to the accepted iterate.
    pub fn step(&mut self) -> Result<OuterStep> {
        let k = self.iteration;
        let mut l = self.initial_l();
        let window: Vec<f64> = self.history.iter().copied().collect();
        let mut inner = 0;
        let (candidate, f_new, step_sq) = loop {
            inner += 1;
            let candidate = npg_step_candidate(&self.current, &self.grad, l, &self.constraint)?
                .into_vec();
            let step_sq = distance_sq(&candidate, &self.current);
            if step_sq == 0.0 {
                break (candidate, self.f_current, 0.0);
            }
            let f_new = self.objective.value(&candidate);
            if !f_new.is_finite() {
                return Err(Error::SolverNonFinite {
                    quantity: "objective",
                    iteration: k,
                });
            }
            if nonmonotone_accept(f_new, &window, self.params.c, step_sq) {
                break (candidate, f_new, step_sq);
            }
            l *= self.params.tau;
            if !l.is_finite() {
                return Err(Error::StepsizeOverflow {
                    iteration: k,
                    inner,
                });
            }
        };

        let grad_new = if step_sq == 0.0 {
            self.grad.clone()
        } else {
            let g = self.objective.gradient(&candidate);
            check_finite(f_new, &g, k + 1)?;
            g
        };

        self.previous = Some(std::mem::replace(&mut self.current, candidate));
        self.previous_grad = Some(std::mem::replace(&mut self.grad, grad_new));
        self.f_current = f_new;
        self.history.push_back(f_new);
        if self.history.len() > self.params.memory + 1 {
            self.history.pop_front();
        }
        self.iteration += 1;
        self.last_l = l;

        Ok(OuterStep {
            inner_count: inner,
            l,
            step_norm: step_sq.sqrt(),
            objective: f_new,
        })
    }

    /// Projected-gradient residual at the current iterate using [`Self::last_l`].
    pub fn stationarity_residual(&self) -> Result<f64> {
        stationarity_residual(&self.current, &self.grad, self.last_l, &self.constraint)
    }

    fn into_weights(self) -> Weights {
        Weights::from_vec(self.current)
    }
}

fn check_finite(f: f64, grad: &[f64], iteration: usize) -> Result<()> {
    if !f.is_finite() {
        return Err(Error::SolverNonFinite {
            quantity: "objective",
            iteration,
        });
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::SolverNonFinite {
            quantity: "gradient",
            iteration,
        });
    }
    Ok(())
}

/// Minimizes `objective` over the sparse capped simplex from the feasible
/// start `x0`.
pub fn npg_solve<O: SmoothObjective>(
    objective: O,
    constraint: &SparseSimplexConstraint,
    params: &SolverParams,
    x0: &[f64],
) -> Result<SolveResult> {
    let mut state = NpgState::new(objective, *constraint, *params, x0)?;
    let mut objective_trace = vec![state.objective_value()];
    let mut inner_counts = Vec::new();
    let mut step_norms = Vec::new();
    let mut status = Status::MaxIterReached;

    while state.iteration() < params.max_iter {
        let step = state.step()?;
        objective_trace.push(step.objective);
        inner_counts.push(step.inner_count);
        step_norms.push(step.step_norm);
        if step.step_norm <= params.step_tol {
            status = Status::ConvergedStepTol;
            break;
        }
    }

    let stationarity_residual = state.stationarity_residual()?;
    let final_l = state.last_l();
    Ok(SolveResult {
        weights: state.into_weights(),
        objective_trace,
        inner_counts,
        step_norms,
        status,
        stationarity_residual,
        final_l,
    })
}
