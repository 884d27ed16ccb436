use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// The config file could not be read or parsed.
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid config: {0}")]
    Validation(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Numerical(#[from] tubecond::Error),

    #[error("{failed} of {total} jobs failed")]
    JobsFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code: 1 for bad input, 2 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Validation(_) => 1,
            CliError::Numerical(tubecond::Error::Invalid(_)) => 1,
            CliError::Io { .. } | CliError::Numerical(_) | CliError::JobsFailed { .. } => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
