use std::path::PathBuf;

use markov_anova_core as core;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// `validate` ran but at least one check failed.
    pub const CHECKS_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    /// Malformed data, model or configuration.
    pub const DATA: i32 = 3;
    /// Inputs are well-formed but statistically insufficient.
    pub const STATISTICAL: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(e) if e.is_statistical() => exit::STATISTICAL,
            Error::Usage(_) => exit::USAGE,
            _ => exit::DATA,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse { path: path.into(), message: message.to_string() }
    }
}
