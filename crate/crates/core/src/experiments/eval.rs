//! Train/test protocol, tracking-error metrics and result tables.

use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::te_value;
use crate::problem::{validate_problem, SolverParams, SparseSimplexConstraint, TrackingProblem};
use crate::solver::{npg_solve, random_feasible_point, SolveResult};

/// Splits periods into a leading training half and a trailing test half.
/// With an odd period count the extra period goes to training.
pub fn split_train_test(problem: &TrackingProblem) -> Result<(TrackingProblem, TrackingProblem)> {
    let t = problem.period_count();
    if t < 2 {
        return Err(Error::TooFewPeriods {
            required: 2,
            found: t,
        });
    }
    let train_len = t.div_ceil(2);
    Ok((problem.periods(0..train_len)?, problem.periods(train_len..t)?))
}

/// In-sample and out-of-sample tracking errors of `weights`.
pub fn tracking_errors(
    weights: &[f64],
    train: &TrackingProblem,
    test: &TrackingProblem,
) -> Result<(f64, f64)> {
    for (field, p) in [("train", train), ("test", test)] {
        if p.asset_count() != weights.len() {
            return Err(Error::DimensionMismatch {
                field,
                expected: weights.len(),
                found: p.asset_count(),
            });
        }
    }
    Ok((te_value(train, weights), te_value(test, weights)))
}

/// `|TEI - TEO|`: how far the out-of-sample error drifts from the fitted one.
pub fn consistency(tei: f64, teo: f64) -> f64 {
    (tei - teo).abs()
}

/// Relative out-of-sample improvement of method A over method B, in percent.
pub fn superiority(teo_a: f64, teo_b: f64) -> Result<f64> {
    if teo_b == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((teo_b - teo_a) / teo_b * 100.0)
}

/// One solved (dataset, density, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub dataset: String,
    pub density: usize,
    pub tei: f64,
    pub teo: f64,
    pub s_true: usize,
    pub runtime_seconds: f64,
    pub seed: u64,
}

/// Published (or otherwise external) errors of a comparison method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub dataset: String,
    pub density: usize,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default)]
    pub tei: Option<f64>,
    pub teo: f64,
}

fn default_method() -> String {
    "reference".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub dataset: String,
    pub density: usize,
    pub seed: u64,
    pub method: String,
    pub tei: f64,
    pub teo: f64,
    pub cons: f64,
    pub ref_tei: Option<f64>,
    pub ref_teo: f64,
    pub ref_cons: Option<f64>,
    /// `SupO(ours, method)` in percent.
    pub supo: f64,
}

/// Everything that stays fixed across the cells of a run.
#[derive(Debug, Clone)]
pub struct Experiment<'a> {
    pub dataset: &'a str,
    pub train: &'a TrackingProblem,
    pub test: &'a TrackingProblem,
    pub cap: f64,
    pub params: SolverParams,
}

/// Result of one cell together with the full solver output.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub row: EvaluationRow,
    pub solve: SolveResult,
}

impl Experiment<'_> {
    /// Solves on the training half from the random feasible start drawn with
    /// `seed` and scores the result on both halves. The runtime covers the
    /// solve only.
    pub fn run_cell(&self, density: usize, seed: u64) -> Result<CellOutcome> {
        let n = self.train.asset_count();
        let constraint = SparseSimplexConstraint::new(density, self.cap, n)?;
        validate_problem(self.train, &constraint)?;
        validate_problem(self.test, &constraint)?;
        let params = SolverParams {
            rng_seed: seed,
            ..self.params
        };
        let x0 = random_feasible_point(&constraint, seed);

        let started = Instant::now();
        let solve = npg_solve(self.train, &constraint, &params, x0.as_slice())?;
        let runtime_seconds = started.elapsed().as_secs_f64();

        let (tei, teo) = tracking_errors(solve.weights.as_slice(), self.train, self.test)?;
        let row = EvaluationRow {
            dataset: self.dataset.to_string(),
            density,
            tei,
            teo,
            s_true: solve.weights.nonzero_count(),
            runtime_seconds,
            seed,
        };
        Ok(CellOutcome { row, solve })
    }

    /// Runs every (density, seed) pair on the current rayon pool. Rows come
    /// back sorted by (dataset, density, seed).
    pub fn run_grid(&self, densities: &[usize], seeds: &[u64]) -> Result<Vec<CellOutcome>> {
        let cells: Vec<(usize, u64)> = densities
            .iter()
            .flat_map(|&d| seeds.iter().map(move |&s| (d, s)))
            .collect();
        let mut outcomes = cells
            .par_iter()
            .map(|&(d, s)| self.run_cell(d, s))
            .collect::<Result<Vec<_>>>()?;
        outcomes.sort_by(|a, b| row_order(&a.row, &b.row));
        Ok(outcomes)
    }
}

fn row_order(a: &EvaluationRow, b: &EvaluationRow) -> std::cmp::Ordering {
    (&a.dataset, a.density, a.seed).cmp(&(&b.dataset, b.density, b.seed))
}

/// Keeps the lowest-TEI row of every (dataset, density); ties go to the
/// smaller seed.
pub fn best_per_density(rows: &[EvaluationRow]) -> Vec<EvaluationRow> {
    let mut sorted = rows.to_vec();
    sorted.sort_by(row_order);
    let mut best: Vec<EvaluationRow> = Vec::new();
    for row in sorted {
        match best.last_mut() {
            Some(last) if last.dataset == row.dataset && last.density == row.density => {
                if row.tei < last.tei {
                    *last = row;
                }
            }
            _ => best.push(row),
        }
    }
    best
}

/// Joins our rows with reference rows on (dataset, density); one output row
/// per matching pair, in the order of `ours` then reference method name.
pub fn compare(ours: &[EvaluationRow], reference: &[ReferenceRow]) -> Result<Vec<ComparisonRow>> {
    let mut out = Vec::new();
    for row in ours {
        let mut matches: Vec<&ReferenceRow> = reference
            .iter()
            .filter(|r| r.dataset == row.dataset && r.density == row.density)
            .collect();
        matches.sort_by(|a, b| a.method.cmp(&b.method));
        for r in matches {
            out.push(ComparisonRow {
                dataset: row.dataset.clone(),
                density: row.density,
                seed: row.seed,
                method: r.method.clone(),
                tei: row.tei,
                teo: row.teo,
                cons: consistency(row.tei, row.teo),
                ref_tei: r.tei,
                ref_teo: r.teo,
                ref_cons: r.tei.map(|tei| consistency(tei, r.teo)),
                supo: superiority(row.teo, r.teo)?,
            });
        }
    }
    Ok(out)
}

/// Output encodings for result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Json,
}

/// Writes serializable rows as CSV (header first) or as a pretty JSON array.
pub fn write_table<T: Serialize, W: Write>(rows: &[T], format: TableFormat, mut out: W) -> Result<()> {
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush().map_err(csv::Error::from)?;
        }
        TableFormat::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n").map_err(|e| Error::Json(serde_json::Error::io(e)))?;
        }
    }
    Ok(())
}

/// Reads rows written by [`write_table`] in CSV form (or any CSV with the
/// same column names).
pub fn read_csv_table<T: for<'de> Deserialize<'de>, R: Read>(input: R) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    Ok(rdr.deserialize().collect::<Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};

    use super::*;

    fn problem_with_periods(t: usize) -> TrackingProblem {
        TrackingProblem::new(
            DMatrix::from_fn(t, 2, |r, c| (r + c) as f64 * 0.01),
            DVector::from_fn(t, |r, _| r as f64 * 0.01),
        )
        .unwrap()
    }

    #[test]
    fn split_sizes() {
        for (t, train, test) in [(10, 5, 5), (11, 6, 5), (2, 1, 1)] {
            let (a, b) = split_train_test(&problem_with_periods(t)).unwrap();
            assert_eq!((a.period_count(), b.period_count()), (train, test));
        }
        assert!(split_train_test(&problem_with_periods(1)).is_err());
    }

    #[test]
    fn split_keeps_order() {
        let (a, b) = split_train_test(&problem_with_periods(5)).unwrap();
        assert_eq!(a.index_returns().as_slice(), &[0.0, 0.01, 0.02]);
        assert_eq!(b.index_returns().as_slice(), &[0.03, 0.04]);
    }

    #[test]
    fn identical_halves_give_equal_errors() {
        let p = problem_with_periods(4);
        let (tei, teo) = tracking_errors(&[0.5, 0.5], &p, &p).unwrap();
        assert_eq!(tei, teo);
        assert!(tracking_errors(&[1.0], &p, &p).is_err());
    }

    #[test]
    fn consistency_values() {
        assert_abs_diff_eq!(consistency(6.23e-5, 5.17e-5), 1.06e-5, epsilon = 1e-12);
        assert_eq!(consistency(3.0e-5, 3.0e-5), 0.0);
        assert_eq!(consistency(0.0, 3e-5), 3e-5);
    }

    #[test]
    fn superiority_values() {
        assert_abs_diff_eq!(superiority(5.17e-5, 8.87e-5).unwrap(), 41.71, epsilon = 0.01);
        assert_abs_diff_eq!(superiority(5.17e-5, 7.07e-5).unwrap(), 26.87, epsilon = 0.01);
        assert_eq!(superiority(2e-5, 2e-5).unwrap(), 0.0);
        assert!(matches!(superiority(1e-5, 0.0), Err(Error::ZeroReference)));
    }

    fn row(dataset: &str, density: usize, seed: u64, tei: f64) -> EvaluationRow {
        EvaluationRow {
            dataset: dataset.into(),
            density,
            tei,
            teo: 2.0 * tei,
            s_true: density,
            runtime_seconds: 0.0,
            seed,
        }
    }

    #[test]
    fn best_row_per_density() {
        let rows = vec![
            row("a", 5, 2, 1.0),
            row("a", 5, 1, 0.5),
            row("a", 6, 1, 0.7),
            row("a", 5, 3, 0.5),
        ];
        let best = best_per_density(&rows);
        assert_eq!(best.len(), 2);
        assert_eq!((best[0].density, best[0].seed), (5, 1));
        assert_eq!(best[1].density, 6);
    }

    #[test]
    fn comparison_join() {
        let ours = vec![row("hs", 5, 0, 6.23e-5)];
        let reference = vec![
            ReferenceRow {
                dataset: "hs".into(),
                density: 5,
                method: "mip".into(),
                tei: Some(5.69e-5),
                teo: 8.87e-5,
            },
            ReferenceRow {
                dataset: "hs".into(),
                density: 6,
                method: "mip".into(),
                tei: None,
                teo: 1.0,
            },
        ];
        let cmp = compare(&ours, &reference).unwrap();
        assert_eq!(cmp.len(), 1);
        assert_eq!(cmp[0].method, "mip");
        assert_abs_diff_eq!(cmp[0].ref_cons.unwrap(), 3.18e-5, epsilon = 1e-12);
    }

    #[test]
    fn csv_table_columns() {
        let mut buf = Vec::new();
        write_table(&[row("hs", 5, 7, 0.25)], TableFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "dataset,density,tei,teo,s_true,runtime_seconds,seed"
        );
        let back: Vec<EvaluationRow> = read_csv_table(text.as_bytes()).unwrap();
        assert_eq!(back, vec![row("hs", 5, 7, 0.25)]);
    }

    #[test]
    fn json_table() {
        let mut buf = Vec::new();
        write_table(&[row("hs", 5, 7, 0.25)], TableFormat::Json, &mut buf).unwrap();
        let back: Vec<EvaluationRow> = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back[0].seed, 7);
    }
}
