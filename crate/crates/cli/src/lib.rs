//! Command-line front end: spec ingestion, command dispatch, and
//! machine-readable residual reports for the dilation library.

pub mod commands;
pub mod report;
pub mod spec;

use thiserror::Error;

/// Front-end errors; parse and validation failures map to exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("io error: {0}")]
    Io(String),
}

pub use commands::{run, CommandKind, Options};
pub use report::{Check, Report};
pub use spec::{parse_system, parse_system_str, ParsedSystem, SystemSpec};
