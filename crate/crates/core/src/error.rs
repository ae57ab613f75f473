use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of a function (angle, index, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration violates one of the scenario invariants.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("received symbols are missing subcarrier {0}")]
    MissingSubcarrier(usize),

    #[error("AGC gain undefined: input has zero variance")]
    ZeroVariance,

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn domain_err(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
