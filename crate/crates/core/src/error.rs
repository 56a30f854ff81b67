use thiserror::Error;

use crate::metrics::MetricKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A point lies outside the domain or on its boundary.
    #[error("point {0} is not an interior point of the domain")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The vertex of an angle coincides with one of its endpoints.
    #[error("degenerate angle: vertex coincides with an endpoint")]
    DegenerateAngle,

    #[error("an unbounded boundary needs a finite sampling window")]
    MissingWindow,

    #[error("value out of range: {0}")]
    Range(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("metric {0} is not supported by this operation")]
    UnsupportedMetric(MetricKind),

    #[error("ball is unbounded along {0} traced rays")]
    UnboundedBall(usize),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// Malformed command-line or environment input.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// True for errors raised while constructing or parsing inputs.
    pub fn is_parse_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidPoint(_) | Error::InvalidDomain(_) | Error::Parse(_)
        )
    }
}
