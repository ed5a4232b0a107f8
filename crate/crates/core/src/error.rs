use thiserror::Error;

use crate::formula::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),

    #[error("negation over until is not supported: `{0}`")]
    NegatedUntil(String),

    #[error("formula is not in negation normal form")]
    NotNnf,

    #[error("{0} needs at least two operands")]
    Arity(&'static str),

    #[error("formula reaches step {needed} but the horizon is {available}")]
    Horizon { needed: usize, available: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("smoothing parameter must be positive, got {0}")]
    Sharpness(f64),

    #[error("missing assignment entry: {0}")]
    MissingAssignment(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
