use std::path::PathBuf;

use crate::approx::BestFound;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("tolerance {tolerance:e} unreachable within K_max = {k_max} (best: {best})")]
    ToleranceUnreachable {
        tolerance: f64,
        k_max: usize,
        best: Box<BestFound>,
    },

    #[error("lookup table cell (sigma = {sigma}, eps = {eps:e}) failed: {source}")]
    LutCell {
        sigma: f64,
        eps: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
