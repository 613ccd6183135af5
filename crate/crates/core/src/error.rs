use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library. Divergence of an adaptive filter is not an
/// error; it is recorded on the filter state and in the trial trace.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("filter bank design: {0}")]
    Design(String),

    #[error("shape mismatch: expected {expected}, got {got} ({what})")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("moment estimation: {0}")]
    Estimation(String),

    /// The step size lies outside the region where the steady-state model has
    /// a positive denominator.
    #[error("steady-state model unstable: denominator {denominator:e} <= 0")]
    Unstable { denominator: f64 },

    #[error("trace too short: need {needed} samples, have {available}")]
    TraceLength { needed: usize, available: usize },

    #[error("all {trials} trials diverged")]
    AllDiverged { trials: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
