use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(String),

    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },

    #[error("series too short: need at least {needed} samples, got {got} ({context})")]
    TooShort {
        needed: usize,
        got: usize,
        context: &'static str,
    },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("non-positive price {value} at index {index}")]
    NonPositive { index: usize, value: f64 },

    #[error("zero variance: {0}")]
    ZeroVariance(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("level {level} out of range 1..={max}")]
    LevelOutOfRange { level: usize, max: usize },

    #[error("ragged table: column `{column}` has {len} rows, expected {expected}")]
    RaggedTable {
        column: String,
        len: usize,
        expected: usize,
    },

    #[error("empty table")]
    EmptyTable,

    #[error("insufficient points for fit: {got} < {needed}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Stable machine-readable tag, used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
            Error::MissingColumn(_) => "missing_column",
            Error::DuplicateTimestamp(_) => "duplicate_timestamp",
            Error::BadRow { .. } => "bad_row",
            Error::TooShort { .. } => "too_short",
            Error::NonFinite(_) => "non_finite",
            Error::NonPositive { .. } => "non_positive",
            Error::ZeroVariance(_) => "zero_variance",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::LevelOutOfRange { .. } => "level_out_of_range",
            Error::RaggedTable { .. } => "ragged_table",
            Error::EmptyTable => "empty_table",
            Error::InsufficientPoints { .. } => "insufficient_points",
            Error::Json(_) => "json",
        }
    }
}
