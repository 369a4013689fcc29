//! Orchestration behind the `tensemble` binary: CSV/JSON ingestion and
//! persistence ([`io`]) and the repetition pipeline ([`pipeline`]).
//!
//! Errors carry the process exit code the binary should end with: usage
//! problems exit 1, unreadable or malformed data exits 2, numerical failures
//! exit 3. A solver that stops without reaching its tolerance is *not* a
//! failure; it is recorded per repetition in the report.

pub mod io;
pub mod pipeline;

/// Process-level error with its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or flag combinations (exit 1).
    #[error("usage: {0}")]
    Usage(String),
    /// Unreadable, malformed, or inconsistent input data (exit 2).
    #[error("data: {0}")]
    Data(String),
    /// Numerical failure inside the pipeline (exit 3).
    #[error("numerical: {0}")]
    Numeric(String),
}

impl CliError {
    /// The exit code this error maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<tensemble::Error> for CliError {
    fn from(err: tensemble::Error) -> Self {
        match err {
            tensemble::Error::Backend(_)
            | tensemble::Error::NonFinite(_)
            | tensemble::Error::Inconsistent(_) => CliError::Numeric(err.to_string()),
            _ => CliError::Data(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

/// Shorthand for fallible CLI operations.
pub type CliResult<T> = Result<T, CliError>;
