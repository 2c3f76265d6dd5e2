//! Price data ingestion.
//!
//! Two layouts are understood:
//!
//! * OR-library index-tracking files: whitespace-separated numbers. The first
//!   two tokens are the asset count `N` and the period count `T`; they are
//!   followed by `N + 1` price series, the index first, each holding `T + 1`
//!   prices (periods `0..=T`). Series of exactly `T` prices are accepted too.
//!   Line breaks carry no meaning.
//! * CSV: a header row of labels, one row per date. A leading `date` column
//!   (or any column whose values are not numbers) is ignored; the index
//!   column is chosen by name or zero-based position among the numeric
//!   columns.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::TrackingProblem;

/// Raw prices: `P` observations of the index and of `n` assets.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    index_prices: DVector<f64>,
    asset_prices: DMatrix<f64>,
    labels: Option<Vec<String>>,
}

impl PriceSeries {
    pub fn new(
        index_prices: DVector<f64>,
        asset_prices: DMatrix<f64>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if asset_prices.nrows() != index_prices.len() {
            return Err(Error::DimensionMismatch {
                field: "asset_prices",
                expected: index_prices.len(),
                found: asset_prices.nrows(),
            });
        }
        if asset_prices.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                field: "asset_prices",
                expected: 1,
                found: 0,
            });
        }
        if let Some(labels) = &labels {
            if labels.len() != asset_prices.ncols() {
                return Err(Error::DimensionMismatch {
                    field: "labels",
                    expected: asset_prices.ncols(),
                    found: labels.len(),
                });
            }
        }
        if let Some((row, &value)) = index_prices
            .iter()
            .enumerate()
            .find(|(_, p)| !(**p > 0.0 && p.is_finite()))
        {
            return Err(Error::NonPositivePrice {
                series: "index".into(),
                row,
                value,
            });
        }
        for (col, series) in asset_prices.column_iter().enumerate() {
            if let Some((row, &value)) = series
                .iter()
                .enumerate()
                .find(|(_, p)| !(**p > 0.0 && p.is_finite()))
            {
                let series = match &labels {
                    Some(l) => format!("asset {col} ({})", l[col]),
                    None => format!("asset {col}"),
                };
                return Err(Error::NonPositivePrice { series, row, value });
            }
        }
        Ok(Self {
            index_prices,
            asset_prices,
            labels,
        })
    }

    pub fn index_prices(&self) -> &DVector<f64> {
        &self.index_prices
    }

    /// Observations in rows, assets in columns.
    pub fn asset_prices(&self) -> &DMatrix<f64> {
        &self.asset_prices
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn asset_count(&self) -> usize {
        self.asset_prices.ncols()
    }

    /// Number of price observations.
    pub fn observation_count(&self) -> usize {
        self.index_prices.len()
    }
}

/// Simple returns `(p_t - p_{t-1}) / p_{t-1}` for index and assets alike.
pub fn prices_to_returns(prices: &PriceSeries) -> Result<TrackingProblem> {
    let obs = prices.observation_count();
    if obs < 2 {
        return Err(Error::TooFewPeriods {
            required: 2,
            found: obs,
        });
    }
    let simple = |prev: f64, next: f64| (next - prev) / prev;
    let index = DVector::from_fn(obs - 1, |t, _| {
        simple(prices.index_prices[t], prices.index_prices[t + 1])
    });
    let p = &prices.asset_prices;
    let assets = DMatrix::from_fn(obs - 1, p.ncols(), |t, i| simple(p[(t, i)], p[(t + 1, i)]));
    TrackingProblem::new(assets, index)
}

/// Parses OR-library index-tracking text; `path` is only used in messages.
pub fn parse_orlibrary(text: &str, path: &Path) -> Result<PriceSeries> {
    let parse_error = |location: String, message: String| Error::Parse {
        path: path.to_path_buf(),
        location,
        message,
    };

    // (line, column, token)
    let tokens: Vec<(usize, usize, &str)> = text
        .lines()
        .enumerate()
        .flat_map(|(line, content)| {
            let base = content.as_ptr() as usize;
            content
                .split_whitespace()
                .map(move |tok| (line + 1, tok.as_ptr() as usize - base + 1, tok))
        })
        .collect();

    let header_count = |pos: usize, what: &str| -> Result<usize> {
        let Some(&(line, col, tok)) = tokens.get(pos) else {
            return Err(parse_error(
                "header".into(),
                format!("missing {what}; expected `<assets> <periods>`"),
            ));
        };
        let value: f64 = tok.parse().map_err(|_| {
            parse_error(
                format!("line {line}, column {col}"),
                format!("{what} `{tok}` is not a number"),
            )
        })?;
        if value < 1.0 || value.fract() != 0.0 {
            return Err(parse_error(
                format!("line {line}, column {col}"),
                format!("{what} must be a positive integer, got `{tok}`"),
            ));
        }
        Ok(value as usize)
    };
    let assets = header_count(0, "asset count")?;
    let periods = header_count(1, "period count")?;

    let body = &tokens[2..];
    let series_count = assets + 1;
    let observations = if body.len() == series_count * (periods + 1) {
        periods + 1
    } else if body.len() == series_count * periods {
        periods
    } else {
        let last = tokens.last().map_or(1, |t| t.0);
        return Err(parse_error(
            format!("line {last}"),
            format!(
                "expected {} price tokens ({} series of {} prices) after the header, found {}",
                series_count * (periods + 1),
                series_count,
                periods + 1,
                body.len()
            ),
        ));
    };
    if observations < 2 {
        return Err(parse_error(
            "header".into(),
            "at least two price observations are required".into(),
        ));
    }

    let mut values = Vec::with_capacity(body.len());
    for &(line, col, tok) in body {
        let v: f64 = tok.parse().map_err(|_| {
            parse_error(
                format!("line {line}, column {col}"),
                format!("price `{tok}` is not a number"),
            )
        })?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(parse_error(
                format!("line {line}, column {col}"),
                format!("price must be positive and finite, got `{tok}`"),
            ));
        }
        values.push(v);
    }

    let index = DVector::from_column_slice(&values[..observations]);
    // series are stored one after another, which is column-major for an
    // observations x assets matrix
    let asset_prices = DMatrix::from_column_slice(observations, assets, &values[observations..]);
    PriceSeries::new(index, asset_prices, None)
}

pub fn load_orlibrary(path: impl AsRef<Path>) -> Result<PriceSeries> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    parse_orlibrary(&text, path)
}

/// Which CSV column holds the index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexColumn {
    Name(String),
    /// Zero-based position among the numeric columns.
    Position(usize),
}

impl IndexColumn {
    /// Parses a command-line value: a plain integer is a position, anything
    /// else a column name.
    pub fn parse(spec: &str) -> Self {
        spec.parse()
            .map(Self::Position)
            .unwrap_or_else(|_| Self::Name(spec.to_string()))
    }
}

impl Default for IndexColumn {
    fn default() -> Self {
        Self::Position(0)
    }
}

/// Parses CSV prices; see the module docs for the layout.
pub fn parse_price_csv<R: std::io::Read>(
    reader: R,
    index_column: &IndexColumn,
    path: &Path,
) -> Result<PriceSeries> {
    let parse_error = |location: String, message: String| Error::Parse {
        path: path.to_path_buf(),
        location,
        message,
    };

    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let records: Vec<csv::StringRecord> = rdr.records().collect::<Result<_, _>>()?;
    if records.len() < 2 {
        return Err(parse_error(
            "body".into(),
            format!("need at least two rows of prices, found {}", records.len()),
        ));
    }

    // a column is numeric unless it is named `date` or its first cell is not a number
    let numeric: Vec<usize> = (0..headers.len())
        .filter(|&c| {
            !headers[c].eq_ignore_ascii_case("date")
                && records[0].get(c).is_some_and(|v| v.parse::<f64>().is_ok())
        })
        .collect();
    if numeric.len() < 2 {
        return Err(parse_error(
            "header".into(),
            "need an index column and at least one asset column".into(),
        ));
    }

    let index_pos = match index_column {
        IndexColumn::Position(p) => {
            if *p >= numeric.len() {
                return Err(parse_error(
                    "header".into(),
                    format!("index position {p} out of range ({} numeric columns)", numeric.len()),
                ));
            }
            *p
        }
        IndexColumn::Name(name) => numeric
            .iter()
            .position(|&c| headers[c] == *name)
            .ok_or_else(|| parse_error("header".into(), format!("no numeric column `{name}`")))?,
    };
    let index_col = numeric[index_pos];
    let asset_cols: Vec<usize> = numeric.iter().copied().filter(|&c| c != index_col).collect();

    let rows = records.len();
    let mut index = DVector::zeros(rows);
    let mut assets = DMatrix::zeros(rows, asset_cols.len());
    for (r, record) in records.iter().enumerate() {
        // header is line 1
        let line = r + 2;
        let cell = |c: usize| -> Result<f64> {
            let raw = record.get(c).ok_or_else(|| {
                parse_error(format!("line {line}"), format!("missing column `{}`", headers[c]))
            })?;
            raw.parse().map_err(|_| {
                parse_error(
                    format!("line {line}, column `{}`", headers[c]),
                    format!("price `{raw}` is not a number"),
                )
            })
        };
        index[r] = cell(index_col)?;
        for (j, &c) in asset_cols.iter().enumerate() {
            assets[(r, j)] = cell(c)?;
        }
    }
    let labels = asset_cols.iter().map(|&c| headers[c].clone()).collect();
    PriceSeries::new(index, assets, Some(labels))
}

pub fn load_price_csv(path: impl AsRef<Path>, index_column: &IndexColumn) -> Result<PriceSeries> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_price_csv(file, index_column, path)
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: PathBuf::from(path),
        source,
    })
}
