use std::path::PathBuf;

use picard_core::Error as CoreError;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("resource ceiling: {0}")]
    Ceiling(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Check(_) => 3,
            CliError::Ceiling(_) => 4,
            CliError::Io { .. } | CliError::Internal(_) => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Ceiling { .. } => CliError::Ceiling(e.to_string()),
            CoreError::InvalidArgument(_) | CoreError::InvalidDims { .. } | CoreError::Shape(_) => {
                CliError::Config(e.to_string())
            }
            CoreError::Format(_) => CliError::Internal(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
