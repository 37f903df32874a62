//! Scenario files, the fixture library, CSV reports and the `revcurve`
//! command surface.
// Range checks are written `!(x >= lo)` so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod fixtures;
pub mod report;
pub mod scenario;

use std::path::PathBuf;

pub use fixtures::{fixtures, Fixture};
pub use report::{run_scenario, RunOutcome};
pub use scenario::{load_scenario, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: line {line}, column {column}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("scenario field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("fixture {0}")]
    Fixture(String),
    #[error(transparent)]
    Core(#[from] revcurve_core::Error),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Process exit statuses.
pub mod exit {
    pub const PASS: u8 = 0;
    pub const VERIFICATION_FAILED: u8 = 1;
    pub const INPUT_ERROR: u8 = 2;
}
