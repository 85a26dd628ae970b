//! Run files, price CSVs, command dispatch and result emission.
//!
//! A run is one JSON document ([`RunSpec`]) holding the market, the sector,
//! the initial configuration, the price trajectory and one command. [`run`]
//! dispatches it and returns a [`ResultRecord`] whose tables are written as
//! CSV files next to a `manifest.json` by [`write_results`].

mod output;
mod prices;
mod run;
mod runspec;

pub use output::{write_results, MANIFEST_FILE};
pub use prices::{load_price_csv, parse_price_csv};
pub use run::{run, Cell, Diagnostics, ResultRecord, Table};
pub use runspec::{load_run_spec, parse_run_spec, Command, RunSpec, TimeGrid};

use thiserror::Error;

use crate::error::Error;

/// Failures of the file-facing layer, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}, field `{field}`: {message}")]
    Parse {
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("price file {path}: {message}")]
    PriceCsv { path: String, message: String },
    #[error("cannot access {path}: {message}")]
    Io { path: String, message: String },
    #[error("{context}: {source}")]
    Runtime {
        context: String,
        #[source]
        source: Error,
    },
}

impl IoError {
    /// 1 for malformed or invalid input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            IoError::Parse { .. } | IoError::Validation(_) | IoError::PriceCsv { .. } => 1,
            IoError::Io { .. } | IoError::Runtime { .. } => 2,
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        IoError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}
