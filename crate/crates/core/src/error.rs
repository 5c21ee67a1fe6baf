use crate::graph::EdgeId;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed graph: {0}")]
    MalformedGraph(String),

    #[error("no velocity given for edge {0}")]
    MissingVelocity(EdgeId),

    #[error("invalid velocity for edge {edge}: {reason}")]
    InvalidVelocity { edge: EdgeId, reason: String },

    #[error("velocity of edge {0} is not an exact rational")]
    NotRational(EdgeId),

    #[error("integer overflow computing the common multiplier of edges {edges:?}")]
    Overflow { edges: Vec<EdgeId> },

    #[error("operator mismatch: {0}")]
    WrongOperator(String),

    #[error("exact arithmetic required: {0}")]
    Precision(String),

    #[error("malformed state: {0}")]
    MalformedState(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("series truncation did not reach tolerance {tol:e}; achieved bound {achieved:e} after {terms} terms")]
    Truncation {
        tol: f64,
        achieved: f64,
        terms: usize,
    },

    #[error("||B^C_lambda|| = {norm} >= 1")]
    ContractionViolation { norm: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
