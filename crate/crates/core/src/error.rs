//! Error type shared by every module in this crate.

use alloc::string::String;
use core::fmt;

/// Errors produced by the numeric core.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoreError {
    /// Shape or length mismatch between operands.
    Dimension(String),
    /// NaN or infinity where a finite value is required.
    NonFinite(String),
    /// Class or position outside its valid range.
    Index { index: usize, bound: usize },
    /// Rejected argument or configuration value.
    Parameter(String),
    /// Malformed text input; `line` is 1-based.
    Parse { line: usize, message: String },
    /// A cached intermediate no longer matches the parameters it was
    /// computed from.
    StaleCache,
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            CoreError::NonFinite(msg) => write!(f, "non-finite value: {msg}"),
            CoreError::Index { index, bound } => {
                write!(f, "index {index} out of range (bound {bound})")
            }
            CoreError::Parameter(msg) => write!(f, "invalid parameter: {msg}"),
            CoreError::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            CoreError::StaleCache => write!(
                f,
                "forward cache is stale: parameters changed since it was computed"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CoreError {}

pub type Result<T> = core::result::Result<T, CoreError>;
