use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by the HTTP layer and the CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    BadRequest,
    NotFound,
    Integrity,
    Capability,
    Conflict,
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("region {region} out of bounds for level {level} ({width}x{height})")]
    Bounds {
        region: String,
        level: u32,
        width: u64,
        height: u64,
    },

    #[error("unknown {what} `{name}`")]
    Lookup { what: &'static str, name: String },

    #[error("capability error: {0}")]
    Capability(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate value range for channel `{0}`")]
    DegenerateRange(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "schema version {found} is not supported (expected {expected}); migrate the file first"
    )]
    Migration { found: u64, expected: u64 },

    #[error("snapshot was captured on dataset {snapshot} but the open dataset is {current}")]
    DatasetMismatch { snapshot: String, current: String },

    #[error("cannot restore snapshot: channel `{0}` is not present in the open dataset")]
    MissingChannel(String),

    #[error("point ({x}, {y}) lies outside the lens")]
    Domain { x: f64, y: f64 },

    #[error("infeasible synthetic layout: {0}")]
    Infeasible(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("tiff error: {0}")]
    Tiff(#[from] tiff::TiffError),

    #[error("png error: {0}")]
    Png(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Schema { .. }
            | Error::Bounds { .. }
            | Error::InvalidArgument(_)
            | Error::DegenerateRange(_)
            | Error::DimensionMismatch(_)
            | Error::Domain { .. }
            | Error::Infeasible(_)
            | Error::MissingChannel(_) => ErrorKind::BadRequest,
            Error::Lookup { .. } => ErrorKind::NotFound,
            Error::Integrity(_) | Error::Migration { .. } | Error::Csv(_) | Error::Tiff(_) => {
                ErrorKind::Integrity
            }
            Error::Capability(_) => ErrorKind::Capability,
            Error::DatasetMismatch { .. } => ErrorKind::Conflict,
            Error::Io { .. } | Error::Png(_) | Error::Json(_) => ErrorKind::Internal,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
