use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, WorldError>;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("impossible game type: {0}")]
    Descriptor(String),
    #[error("`{command}` is not an admissible command")]
    NotAdmissible { command: String },
    #[error("episode already finished")]
    Finished,
    #[error("invalid game spec: {0}")]
    Spec(String),
    #[error("bad episode recording: {0}")]
    Record(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
}
