use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("group {group} is rank deficient (column {column} has near-zero residual norm)")]
    RankDeficient { group: usize, column: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty truncation interval for subject {subject}: [{lo}, {hi}]")]
    EmptyInterval { subject: usize, lo: f64, hi: f64 },

    #[error("chain {chain} aborted at iteration {iteration} in {block} update: {detail}")]
    ChainAbort {
        chain: usize,
        iteration: usize,
        block: &'static str,
        detail: String,
    },

    #[error("optimizer did not converge: gradient norm {grad_norm:e} at {iterate:?}")]
    NoConvergence { grad_norm: f64, iterate: Vec<f64> },

    #[error("{0}")]
    Other(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn schema(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Schema { path: path.into(), message: message.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
