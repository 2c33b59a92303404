use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Caller supplied parameters that violate a precondition.
    Config,
    /// Input data is malformed or degenerate.
    Data,
    /// An internal invariant failed.
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Malformed {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("station {station}: line {line}: flow value {raw:?} is not a non-negative finite number")]
    BadFlow {
        station: String,
        line: u64,
        raw: String,
    },

    #[error("flow file for station {0} has no metadata row")]
    MissingMetadata(String),

    #[error("station {0} has metadata but no flow file")]
    MissingFlowFile(String),

    #[error("duplicate station id {0}")]
    DuplicateStation(String),

    #[error("station {station}: date range mismatch: {message}")]
    DateRange { station: String, message: String },

    #[error("station {station}: gap at day {index}: {reason}")]
    Gap {
        station: String,
        index: usize,
        reason: String,
    },

    #[error("station {0} has zero total flow")]
    ZeroTotal(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter(_) => ErrorClass::Config,
            Error::DimensionMismatch(_) | Error::Invariant(_) => ErrorClass::Internal,
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
