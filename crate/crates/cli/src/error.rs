use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("schema: {0}")]
    Schema(String),
    #[error("{path}: {inner}")]
    InFile { path: PathBuf, inner: Box<CliError> },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    #[error("calibration: {0}")]
    Calibration(String),
}

impl CliError {
    pub fn in_file(self, path: &Path) -> CliError {
        CliError::InFile {
            path: path.to_path_buf(),
            inner: Box::new(self),
        }
    }

    pub fn failed(e: impl std::fmt::Display) -> CliError {
        CliError::Failed(e.to_string())
    }
}
