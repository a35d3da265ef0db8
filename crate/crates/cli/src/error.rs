use std::path::{Path, PathBuf};

use thiserror::Error;

/// A command failure and the exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, invalid configuration or an invalid pairing.
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    /// A pipeline stage failed on valid input.
    #[error("{0}")]
    Compute(String),
    /// The paired differences have no spread.
    #[error("{0}")]
    Degenerate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Compute(_) => 4,
            CliError::Degenerate(_) => 5,
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }
}
