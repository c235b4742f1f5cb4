use std::io::ErrorKind;
use std::path::PathBuf;

use dsqn_core::CoreError;
use dsqn_microworld::WorldError;

/// Failure categories, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Missing(PathBuf),
    Failed(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Missing(_) => 3,
            CliError::Failed(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Missing(p) => write!(f, "missing file: {}", p.display()),
            CliError::Failed(m) => write!(f, "{m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Io { path, source } if source.kind() == ErrorKind::NotFound => CliError::Missing(path),
            CoreError::World(w) => w.into(),
            CoreError::Config(m) => CliError::Usage(m),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<WorldError> for CliError {
    fn from(e: WorldError) -> Self {
        match e {
            WorldError::Io { path, source } if source.kind() == ErrorKind::NotFound => CliError::Missing(path),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<dsqn_tensor::TensorError> for CliError {
    fn from(e: dsqn_tensor::TensorError) -> Self {
        CliError::Failed(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
