use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
///
/// A recourse search that finds nothing is not an error; generators return
/// `Ok(None)` for that case.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema mismatch: column `{column}` {reason}")]
    SchemaMismatch { column: String, reason: String },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Divergence { epoch: usize },

    #[error("dimension mismatch: expected {expected} features, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("unsupported model kind: {0}")]
    UnsupportedKind(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("search error: {0}")]
    Search(String),

    #[error("surrogate fit error: {0}")]
    Fit(String),

    #[error("recourse is not valid under the model that produced it")]
    InvalidRecourse,

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),

    #[error("insufficient sample: need at least {needed}, got {got}")]
    InsufficientSample { needed: usize, got: usize },

    #[error("i/o error on {path}: {source}")]
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

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
