use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum AscfError {
    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("parse error at data row {row}, column `{column}`: cannot read `{value}` as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("label error: {0}")]
    Label(String),

    #[error("missing value at data row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("invalid acquisition: instance `{0}` is not a candidate")]
    InvalidAcquisition(String),

    #[error("instance `{0}` has already been acquired")]
    AlreadyAcquired(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("classifier needs both classes, got only `{0}`")]
    SingleClass(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("candidate pool is exhausted")]
    Exhausted,

    #[error("contract error: {0}")]
    Contract(String),

    #[error("pairing error: {0}")]
    Pairing(String),

    #[error("session is busy: lock file {0} exists")]
    Busy(PathBuf),

    #[error("unknown instance id `{0}`")]
    UnknownId(String),

    #[error("run ({repeat}, {fold}) with strategy {strategy} aborted: {source}")]
    RunAborted {
        repeat: usize,
        fold: usize,
        strategy: String,
        #[source]
        source: Box<AscfError>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl AscfError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AscfError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = AscfError> = std::result::Result<T, E>;
