use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config {path}: {reason}")]
    Config { path: PathBuf, reason: String },

    #[error("{stage}: {source}")]
    NotConverged {
        stage: String,
        source: ionbsm_core::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] ionbsm_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for configuration errors, 3 for invariant violations, 4 for estimator
    /// non-convergence and 1 for data and i/o failures.
    pub fn exit_code(&self) -> u8 {
        use ionbsm_core::Error as E;
        match self {
            CliError::Config { .. } => 2,
            CliError::NotConverged { .. } => 4,
            CliError::Io { .. } => 1,
            CliError::Core(e) => match e {
                E::NotConverged { .. } => 4,
                E::MalformedRecord { .. } | E::NoEvents | E::Io(_) | E::EmptyWindow { .. } => 1,
                _ => 3,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
