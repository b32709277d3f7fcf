use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Feature schema problems: missing columns, fingerprint mismatches, unknown families.
    #[error("schema error: {0}")]
    Schema(String),

    /// A cell that could not be parsed.
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    /// A parsed row that violates a record invariant.
    #[error("validation error at line {line}: {message}")]
    Validation { line: u64, message: String },

    /// An invariant violation on an in-memory record (no file position).
    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("corpus contains no records")]
    EmptyCorpus,

    #[error("split error: {0}")]
    Split(String),

    /// Operation called on a value in the wrong state (e.g. reusing absent statistics).
    #[error("state error: {0}")]
    State(String),

    /// Training data that cannot produce a model (one class, no rows).
    #[error("degenerate training data: {0}")]
    DegenerateTraining(String),

    /// A trained model that failed its own post-training checks.
    #[error("training produced an infeasible model: {0}")]
    Infeasible(String),

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
