use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: line {line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    Dimension {
        expected: usize,
        actual: usize,
        context: String,
    },

    #[error("empty vocabulary after filtering (min_df = {min_df})")]
    EmptyVocabulary { min_df: usize },

    #[error("covariance of the {view} view is not positive definite (smallest eigenvalue {min_eigenvalue:e}); use a covariance regularizer reg > 0")]
    Singular {
        view: &'static str,
        min_eigenvalue: f64,
    },

    #[error("non-finite objective at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },

    #[error("unknown id `{0}`")]
    UnknownId(String),

    #[error("query `{0}` has no ground truth")]
    MissingTruth(String),

    #[error("ranked list for `{query}` has {len} items, fewer than k = {k}")]
    ShortList { query: String, len: usize, k: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn dim(expected: usize, actual: usize, context: impl Into<String>) -> Self {
        Error::Dimension {
            expected,
            actual,
            context: context.into(),
        }
    }
}
