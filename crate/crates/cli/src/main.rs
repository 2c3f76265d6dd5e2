//! `sparse-track`: sparse index tracking from the command line.

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use sparse_track::experiments::{
    best_per_density, compare, load_orlibrary, load_price_csv, prices_to_returns, read_csv_table,
    split_train_test, write_table, EvaluationRow, Experiment, PriceSeries, ReferenceRow,
};

use crate::config::{ConfigFile, DataArgs, DataFormat, OutFormat, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "sparse-track", version, about = "Cardinality-constrained index tracking")]
struct Cli {
    /// JSON file supplying defaults for any flag
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve once for a single density and seed
    Solve {
        #[command(flatten)]
        data: DataArgs,

        /// Maximum number of holdings r
        #[arg(long)]
        density: Option<usize>,

        /// Seed of the random feasible start
        #[arg(long)]
        seed: Option<u64>,

        /// Also write the nonzero weights as CSV (asset, label, weight)
        #[arg(long)]
        weights_out: Option<PathBuf>,
    },
    /// Solve over every (density, seed) pair
    Sweep {
        #[command(flatten)]
        data: DataArgs,

        /// Comma-separated densities
        #[arg(long, value_delimiter = ',')]
        densities: Vec<usize>,

        /// Comma-separated seeds
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,

        /// Keep only the lowest-TEI seed per density
        #[arg(long)]
        keep_best: bool,

        /// Worker threads (default: all cores)
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Join a result table with reference results and report Cons and SupO
    Compare {
        /// Result table written by solve or sweep (CSV)
        #[arg(long)]
        ours: PathBuf,

        /// Reference table with columns dataset, density, method, tei, teo
        #[arg(long = "ref")]
        reference: PathBuf,

        #[arg(long)]
        out: Option<PathBuf>,

        #[arg(long, value_enum)]
        out_format: Option<OutFormat>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Solve {
            data,
            density,
            seed,
            weights_out,
        } => {
            let cfg = RunConfig::resolve(
                &data,
                density.into_iter().collect(),
                seed.into_iter().collect(),
                &file,
            )?;
            if cfg.densities.len() != 1 || cfg.seeds.len() != 1 {
                bail!("solve takes exactly one density and one seed; use sweep for grids");
            }
            solve(&cfg, weights_out.or(file.weights_out))
        }
        Command::Sweep {
            data,
            densities,
            seeds,
            keep_best,
            jobs,
        } => {
            let cfg = RunConfig::resolve(&data, densities, seeds, &file)?;
            let keep_best = keep_best || file.keep_best.unwrap_or(false);
            let jobs = jobs.or(file.jobs).unwrap_or(0);
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .context("cannot start worker pool")?;
            pool.install(|| sweep(&cfg, keep_best))
        }
        Command::Compare {
            ours,
            reference,
            out,
            out_format,
        } => {
            let ours: Vec<EvaluationRow> = read_table(&ours)?;
            let reference: Vec<ReferenceRow> = read_table(&reference)?;
            let rows = compare(&ours, &reference)?;
            if rows.is_empty() {
                bail!("no (dataset, density) pair appears in both tables");
            }
            let format = out_format.unwrap_or(match &out {
                Some(p) if p.extension().is_some_and(|e| e == "json") => OutFormat::Json,
                _ => OutFormat::Csv,
            });
            emit(&rows, out.as_deref(), format)
        }
    }
}

fn load(cfg: &RunConfig) -> Result<PriceSeries> {
    let prices = match cfg.format {
        DataFormat::Orlib => load_orlibrary(&cfg.data_path)?,
        DataFormat::Csv => load_price_csv(&cfg.data_path, &cfg.index_column)?,
    };
    Ok(prices)
}

fn solve(cfg: &RunConfig, weights_out: Option<PathBuf>) -> Result<()> {
    let prices = load(cfg)?;
    let problem = prices_to_returns(&prices)?;
    let (train, test) = split_train_test(&problem)?;
    let exp = Experiment {
        dataset: &cfg.dataset,
        train: &train,
        test: &test,
        cap: cfg.cap,
        params: cfg.params,
    };
    let mut outcome = exp.run_cell(cfg.densities[0], cfg.seeds[0])?;
    if !cfg.timing {
        outcome.row.runtime_seconds = 0.0;
    }
    if let Some(path) = weights_out {
        let labels = prices.labels();
        let rows: Vec<WeightRow> = outcome
            .solve
            .weights
            .support()
            .into_iter()
            .map(|i| WeightRow {
                asset: i,
                label: labels
                    .map(|l| l[i].clone())
                    .unwrap_or_else(|| format!("asset{}", i + 1)),
                weight: outcome.solve.weights.as_slice()[i],
            })
            .collect();
        emit(&rows, Some(&path), OutFormat::Csv)?;
    }
    emit(&[outcome.row], cfg.output_path.as_deref(), cfg.output_format)
}

#[derive(Serialize)]
struct WeightRow {
    asset: usize,
    label: String,
    weight: f64,
}

fn sweep(cfg: &RunConfig, keep_best: bool) -> Result<()> {
    let problem = prices_to_returns(&load(cfg)?)?;
    let (train, test) = split_train_test(&problem)?;
    let exp = Experiment {
        dataset: &cfg.dataset,
        train: &train,
        test: &test,
        cap: cfg.cap,
        params: cfg.params,
    };
    let mut rows: Vec<EvaluationRow> = exp
        .run_grid(&cfg.densities, &cfg.seeds)?
        .into_iter()
        .map(|o| o.row)
        .collect();
    if !cfg.timing {
        for row in &mut rows {
            row.runtime_seconds = 0.0;
        }
    }
    if keep_best {
        rows = best_per_density(&rows);
    }
    emit(&rows, cfg.output_path.as_deref(), cfg.output_format)
}

fn read_table<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_csv_table(file).with_context(|| format!("cannot read table {}", path.display()))
}

fn emit<T: Serialize>(rows: &[T], path: Option<&Path>, format: OutFormat) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            let mut w = BufWriter::new(file);
            write_table(rows, format.into(), &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            write_table(rows, format.into(), stdout.lock())?;
        }
    }
    Ok(())
}
