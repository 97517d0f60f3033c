//! Harness errors, each mapped to the process exit code contract:
//! 0 success, 1 failed check, 2 config/usage error, 3 I/O error.

use std::fmt;
use std::path::PathBuf;

#[derive(Debug)]
pub enum LabError {
    /// Invalid configuration or command usage (exit 2).
    Config(String),
    /// A verification command found a violation (exit 1).
    Check(String),
    /// Filesystem trouble (exit 3).
    Io { path: PathBuf, source: std::io::Error },
}

impl LabError {
    pub fn config(message: impl Into<String>) -> Self {
        LabError::Config(message.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Check(_) => 1,
            LabError::Config(_) => 2,
            LabError::Io { .. } => 3,
        }
    }
}

impl fmt::Display for LabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabError::Config(msg) => write!(f, "config error: {msg}"),
            LabError::Check(msg) => write!(f, "check failed: {msg}"),
            LabError::Io { path, source } => {
                write!(f, "io error on {}: {source}", path.display())
            }
        }
    }
}

impl std::error::Error for LabError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            LabError::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl From<alr_core::CoreError> for LabError {
    fn from(err: alr_core::CoreError) -> Self {
        LabError::Config(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
