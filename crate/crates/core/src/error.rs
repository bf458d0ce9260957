use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the forecasting and location pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A value outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data that does not match the documented schema.
    #[error("schema error in {path}: {message}")]
    Schema { path: PathBuf, message: String },

    /// A required input file is absent.
    #[error("missing input: {0}")]
    MissingInput(PathBuf),

    /// The location model has no feasible solution.
    #[error("infeasible model: {0}")]
    Infeasible(String),

    /// A broken internal invariant; indicates a bug rather than bad input.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
