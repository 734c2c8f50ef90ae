use std::path::{Path, PathBuf};

use magnetovar_core::MagError;
use thiserror::Error;

/// Failures of a command, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{0}")]
    NotConverged(String),

    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(MagError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Config(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Core(e) => match e {
                MagError::NotConverged { .. } | MagError::NoDescent { .. } => 3,
                _ => 2,
            },
        }
    }
}

impl From<MagError> for CliError {
    fn from(e: MagError) -> Self {
        match e {
            MagError::Config(s) => CliError::Config(s),
            e => CliError::Core(e),
        }
    }
}
