use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at data row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("empty data: {0}")]
    EmptyData(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("balanced error rate undefined: distribution contains a single class")]
    BerUndefined,

    #[error("absolute continuity violated at atom {index}: q > 0 where p = 0")]
    AbsoluteContinuity { index: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("solver diverged at iteration {iteration}: non-finite objective")]
    Divergence { iteration: usize },

    #[error("invalid bracket: {0}")]
    Bracket(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
