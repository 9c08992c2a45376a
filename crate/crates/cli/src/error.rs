use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("malformed records in {path}: {reason}")]
    Records { path: PathBuf, reason: String },
    #[error(transparent)]
    Model(#[from] dicke::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    /// 2 for bad input, 4 for resource caps, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Read { .. } | CliError::Records { .. } => 2,
            CliError::Model(dicke::Error::InvalidParams(_) | dicke::Error::Domain(_)) => 2,
            CliError::Model(dicke::Error::DimensionCap { .. } | dicke::Error::TruncationCap { .. }) => 4,
            CliError::Write { .. } | CliError::Model(_) => 1,
        }
    }
}
