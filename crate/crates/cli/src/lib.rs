//! Command-line front end for ordered subspace clustering: dataset generation,
//! single-file clustering and the benchmark harness.

pub mod bench;
pub mod commands;
pub mod config;

use osc::OscError;

/// Process exit code for bad arguments or unreadable inputs.
pub const EXIT_USAGE: i32 = 2;
/// Process exit code when a solver fails.
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("solver failed: {message}")]
    Solver {
        message: String,
        /// JSON dump written to stderr alongside the message.
        dump: serde_json::Value,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Solver { .. } => EXIT_SOLVER,
        }
    }
}

impl From<OscError> for CliError {
    fn from(e: OscError) -> Self {
        match e {
            OscError::Divergence { .. } => CliError::Solver {
                message: e.to_string(),
                dump: serde_json::Value::Null,
            },
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
