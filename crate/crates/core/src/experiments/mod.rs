//! Data ingestion and the in-sample / out-of-sample evaluation protocol.

mod data;
mod eval;

pub use data::{
    load_orlibrary, load_price_csv, parse_orlibrary, parse_price_csv, prices_to_returns,
    IndexColumn, PriceSeries,
};
pub use eval::{
    best_per_density, compare, consistency, read_csv_table, split_train_test, superiority,
    tracking_errors, write_table, CellOutcome, ComparisonRow, EvaluationRow, Experiment,
    ReferenceRow, TableFormat,
};
