//! Run configuration: command-line flags merged over an optional JSON file.
//!
//! Every flag has a JSON key of the same name with dashes replaced by
//! underscores. A flag given on the command line wins over the file.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Deserialize;
use sparse_track::experiments::{IndexColumn, TableFormat};
use sparse_track::SolverParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    /// OR-library `indtrack` text file.
    Orlib,
    /// CSV with one price column per series.
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for TableFormat {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => TableFormat::Csv,
            OutFormat::Json => TableFormat::Json,
        }
    }
}

/// Flags shared by `solve` and `sweep`.
#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// Price file to load
    #[arg(long)]
    pub data: Option<PathBuf>,

    /// Input layout; guessed from the file extension when omitted
    #[arg(long, value_enum)]
    pub format: Option<DataFormat>,

    /// CSV column holding the index, by name or zero-based numeric position
    #[arg(long)]
    pub index_column: Option<String>,

    /// Dataset label written to every row (default: file stem)
    #[arg(long)]
    pub dataset: Option<String>,

    /// Upper bound u on every weight
    #[arg(long)]
    pub cap: Option<f64>,

    /// Nonmonotone memory M
    #[arg(long)]
    pub memory: Option<usize>,

    /// Stop when the iterate change is at most this
    #[arg(long)]
    pub tol: Option<f64>,

    /// Outer-iteration limit
    #[arg(long)]
    pub max_iter: Option<usize>,

    /// Write the result table here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Table encoding; guessed from --out when omitted
    #[arg(long, value_enum)]
    pub out_format: Option<OutFormat>,

    /// Report runtime as 0 so repeated runs produce identical files
    #[arg(long)]
    pub no_timing: bool,
}

/// Mirror of the flags as read from `--config`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub data: Option<PathBuf>,
    pub format: Option<DataFormat>,
    pub index_column: Option<String>,
    pub dataset: Option<String>,
    pub density: Option<usize>,
    pub densities: Option<Vec<usize>>,
    pub cap: Option<f64>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub memory: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub out: Option<PathBuf>,
    pub out_format: Option<OutFormat>,
    pub no_timing: Option<bool>,
    pub keep_best: Option<bool>,
    pub jobs: Option<usize>,
    pub weights_out: Option<PathBuf>,
    pub solver: Option<SolverParams>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).with_context(|| format!("cannot open config {}", path.display()))?;
        serde_json::from_reader(BufReader::new(file))
            .with_context(|| format!("cannot parse config {}", path.display()))
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data_path: PathBuf,
    pub format: DataFormat,
    pub index_column: IndexColumn,
    pub dataset: String,
    pub densities: Vec<usize>,
    pub cap: f64,
    pub params: SolverParams,
    pub seeds: Vec<u64>,
    pub output_path: Option<PathBuf>,
    pub output_format: OutFormat,
    pub timing: bool,
}

impl RunConfig {
    /// Combines flags with the config file. `densities` and `seeds` are the
    /// command-line values (possibly empty); the file's singular and plural
    /// keys are both accepted.
    pub fn resolve(
        args: &DataArgs,
        densities: Vec<usize>,
        seeds: Vec<u64>,
        file: &ConfigFile,
    ) -> Result<Self> {
        let Some(data_path) = args.data.clone().or_else(|| file.data.clone()) else {
            bail!("no input data: pass --data or set \"data\" in the config file");
        };
        let format = args
            .format
            .or(file.format)
            .unwrap_or_else(|| guess_format(&data_path));
        let index_column = args
            .index_column
            .as_deref()
            .or(file.index_column.as_deref())
            .map(IndexColumn::parse)
            .unwrap_or_default();
        let dataset = args
            .dataset
            .clone()
            .or_else(|| file.dataset.clone())
            .unwrap_or_else(|| {
                data_path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "data".to_string())
            });

        let densities = if !densities.is_empty() {
            densities
        } else {
            file.densities
                .clone()
                .or_else(|| file.density.map(|d| vec![d]))
                .unwrap_or_default()
        };
        let seeds = if !seeds.is_empty() {
            seeds
        } else {
            file.seeds
                .clone()
                .or_else(|| file.seed.map(|s| vec![s]))
                .unwrap_or_else(|| vec![1])
        };
        let Some(cap) = args.cap.or(file.cap) else {
            bail!("no weight cap: pass --cap or set \"cap\" in the config file");
        };

        let mut params = file.solver.unwrap_or_default();
        if let Some(m) = args.memory.or(file.memory) {
            params.memory = m;
        }
        if let Some(t) = args.tol.or(file.tol) {
            params.step_tol = t;
        }
        if let Some(k) = args.max_iter.or(file.max_iter) {
            params.max_iter = k;
        }

        let output_path = args.out.clone().or_else(|| file.out.clone());
        let output_format = args
            .out_format
            .or(file.out_format)
            .unwrap_or_else(|| match &output_path {
                Some(p) if has_extension(p, "json") => OutFormat::Json,
                _ => OutFormat::Csv,
            });
        let timing = !(args.no_timing || file.no_timing.unwrap_or(false));

        let config = Self {
            data_path,
            format,
            index_column,
            dataset,
            densities,
            cap,
            params,
            seeds,
            output_path,
            output_format,
            timing,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.densities.is_empty() {
            bail!("at least one density is required");
        }
        if self.seeds.is_empty() {
            bail!("at least one seed is required");
        }
        if self.densities.contains(&0) {
            bail!("densities must be at least 1");
        }
        if !(self.cap > 0.0 && self.cap <= 1.0) {
            bail!("cap must lie in (0, 1], got {}", self.cap);
        }
        let smallest = *self.densities.iter().min().unwrap();
        let product = self.cap * smallest as f64;
        if product < 1.0 - 1e-12 {
            bail!(
                "infeasible: cap * density = {} * {} = {} < 1, no portfolio can sum to one",
                self.cap,
                smallest,
                product
            );
        }
        self.params.validate()?;
        Ok(())
    }
}

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

fn guess_format(path: &Path) -> DataFormat {
    if has_extension(path, "csv") {
        DataFormat::Csv
    } else {
        DataFormat::Orlib
    }
}
