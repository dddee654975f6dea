//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical quantity was outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value violated an invariant at load time.
    #[error("invalid config: {key}: {reason}")]
    Config { key: String, reason: String },

    /// A dataset row failed to parse or violated a sample invariant.
    #[error("dataset error at line {line}: {reason}")]
    Dataset { line: usize, reason: String },

    /// The time integrator failed or produced a non-finite state.
    #[error("solver error at step {step}: {reason}")]
    Solver { step: usize, reason: String },

    /// The least-squares fit could not proceed.
    #[error("fit error: {0}")]
    Fit(String),

    /// A simulation inside a batch evaluation failed.
    #[error("simulation of sample '{key}' failed: {source}")]
    Sample {
        key: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
