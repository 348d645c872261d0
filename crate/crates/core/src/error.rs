use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum ScsaError {
    /// An input violated a precondition (bad grid, mismatched shapes, h <= 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The symmetric eigensolver did not converge within its iteration cap.
    #[error(
        "eigensolver failed to converge for eigenvalue index {index} after {iterations} iterations"
    )]
    NoConvergence { index: usize, iterations: usize },

    /// A condition required by an analysis step does not hold.
    #[error("condition {condition} violated: {detail}")]
    Condition {
        condition: &'static str,
        detail: String,
    },

    /// Malformed input file.
    #[error("parse error in {path} at row {row}: {detail}")]
    Parse {
        path: PathBuf,
        row: usize,
        detail: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ScsaError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        ScsaError::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ScsaError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 validation, 3 numeric failure, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScsaError::Domain(_) | ScsaError::Condition { .. } | ScsaError::Parse { .. } => 2,
            ScsaError::NoConvergence { .. } => 3,
            ScsaError::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, ScsaError>;
