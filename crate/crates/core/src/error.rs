use thiserror::Error;

use crate::transport::Obstruction;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent instance data.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A gauge flow left the ray's closed interval. `range` is the admissible
    /// set of flow parameters.
    #[error("gauge {gauge} leaves the ray interval; admissible flow range is [{}, {}]", .range.0, .range.1)]
    Domain { gauge: f64, range: (f64, f64) },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("marginals admit no causal coupling: {0}")]
    Infeasible(Obstruction),

    #[error("model error: {0}")]
    Model(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
