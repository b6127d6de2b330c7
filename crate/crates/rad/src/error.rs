//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by data loading, model fitting, and experiment runs.
#[derive(Debug, Error)]
pub enum RadError {
    /// Underlying I/O failure (file open, read, write).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// CSV parsing or writing failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A dataset violated a structural requirement (wrong arity, bad label,
    /// empty where non-empty is required, ...).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// A configuration value is out of range or inconsistent.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A model was asked to predict before being fitted.
    #[error("model has not been fitted yet")]
    NotFitted,

    /// A refit was requested on an empty training set. Callers treat this as
    /// "keep the previous model" rather than a fatal error.
    #[error("refit skipped: training set is empty")]
    EmptyTrainingSet,

    /// A serialized model or config blob has an unsupported version tag.
    #[error("unsupported format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
}

/// Convenient alias used throughout the crate.
pub type Result<T> = std::result::Result<T, RadError>;
