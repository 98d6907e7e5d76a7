//! Command-line surface for the adaptlab engine: JSON configuration, CSV/JSON
//! outputs, and the `simulate`, `bounds`, `weights` and `rates` workflows.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod output;

use std::path::PathBuf;

use adaptlab_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("validation error at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("{0}")]
    Input(CoreError),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("runtime error: {0}")]
    Runtime(CoreError),
}

impl CliError {
    /// 2 for anything the caller can fix by changing the input, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Schema { .. } | Self::Validation { .. } | Self::Usage(_) | Self::Input(_) => 2,
            Self::Io { .. } | Self::Runtime(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
