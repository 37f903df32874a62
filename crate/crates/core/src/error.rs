use thiserror::Error;

/// Errors raised by the revenue-curve toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid agent `{id}`: {reason}")]
    InvalidAgent { id: String, reason: String },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("agent `{0}` is synthetic and has no offer curve")]
    NoOfferCurve(String),

    #[error("curve {index} is not concave; take its concave hull first")]
    NotConcave { index: usize },

    #[error("mass {requested} is unreachable (at most {reachable} can be sold at a positive price)")]
    UnreachableMass { requested: f64, reachable: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear program failed: {0}")]
    Lp(String),
}

pub type Result<T> = std::result::Result<T, Error>;
