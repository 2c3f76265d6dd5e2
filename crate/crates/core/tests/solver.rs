mod common;

use common::{factor_returns, gaussian_matrix, planted_problem, planted_weights, rng};
use proptest::prelude::*;
use sparse_track::objective::SmoothObjective;
use sparse_track::solver::{inner_iteration_bound, windowed_max, NpgState};
use sparse_track::{
    check_feasible, npg_solve, random_feasible_point, te_lipschitz_bound, SolverParams,
    SparseSimplexConstraint, Status, TrackingProblem,
};

fn planted(seed: u64, t: usize, n: usize, r: usize, u: f64) -> (TrackingProblem, Vec<f64>) {
    let mut g = rng(seed);
    let x = planted_weights(&mut g, n, r, u);
    (planted_problem(gaussian_matrix(&mut g, t, n), &x), x)
}

#[test]
fn every_iterate_is_feasible() {
    let (p, _) = planted(3, 40, 15, 4, 0.5);
    let c = SparseSimplexConstraint::new(4, 0.5, 15).unwrap();
    let x0 = random_feasible_point(&c, 9);
    let mut state = NpgState::new(&p, c, SolverParams::default(), x0.as_slice()).unwrap();
    for _ in 0..200 {
        let step = state.step().unwrap();
        check_feasible(state.current(), &c).unwrap();
        if step.step_norm <= 1e-6 {
            break;
        }
    }
}

#[test]
fn monotone_variant_never_increases() {
    for seed in 0..10 {
        let mut g = rng(500 + seed);
        let p = TrackingProblem::new(factor_returns(&mut g, 60, 25), gaussian_matrix(&mut g, 60, 1).column(0) * 0.02).unwrap();
        let c = SparseSimplexConstraint::new(5, 0.5, 25).unwrap();
        let params = SolverParams { memory: 0, ..SolverParams::default() };
        let res = npg_solve(&p, &c, &params, random_feasible_point(&c, seed).as_slice()).unwrap();
        for w in res.objective_trace.windows(2) {
            assert!(w[1] <= w[0], "{} > {}", w[1], w[0]);
        }
    }
}

#[test]
fn planted_recovery_and_stationarity() {
    let (p, _) = planted(21, 60, 12, 3, 1.0);
    let c = SparseSimplexConstraint::new(3, 1.0, 12).unwrap();
    let mut hits = 0;
    for seed in 0..10 {
        let res = npg_solve(&p, &c, &SolverParams::default(), random_feasible_point(&c, seed).as_slice()).unwrap();
        assert_eq!(res.status, Status::ConvergedStepTol);
        assert!(res.stationarity_residual <= 1e-5, "{}", res.stationarity_residual);
        if res.final_objective() <= 1e-10 {
            hits += 1;
        }
    }
    assert!(hits >= 8, "{hits}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn runs_satisfy_solver_invariants(seed in 0u64..100_000, memory in 0usize..6, r in 1usize..6) {
        let mut g = rng(seed);
        let n = 20;
        let p = TrackingProblem::new(factor_returns(&mut g, 50, n), gaussian_matrix(&mut g, 50, 1).column(0) * 0.02).unwrap();
        let c = SparseSimplexConstraint::new(r, 1.0, n).unwrap();
        let params = SolverParams { memory, ..SolverParams::default() };
        let res = npg_solve(&p, &c, &params, random_feasible_point(&c, seed).as_slice()).unwrap();

        prop_assert!(res.weights.check(&c).is_ok());
        prop_assert_eq!(res.objective_trace.len(), res.inner_counts.len() + 1);

        let env = windowed_max(&res.objective_trace, memory);
        for w in env.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }

        let bound = inner_iteration_bound(te_lipschitz_bound(&p), params.c, params.l_min, params.tau);
        prop_assert!(res.inner_counts.iter().all(|&k| k <= bound));

        if res.status == Status::ConvergedStepTol {
            let min_step = res.step_norms.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert!(min_step <= params.step_tol);
            prop_assert!(res.stationarity_residual <= 10.0 * params.step_tol, "{}", res.stationarity_residual);
        }
        prop_assert_eq!(p.value(res.weights.as_slice()), res.final_objective());
    }
}
