use thiserror::Error;

/// Errors raised across the solution engine.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// A physical constant violates its admissible range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An argument lies outside the domain of the operation (e.g. s < 0).
    #[error("domain error: {0}")]
    Domain(String),

    /// A scale factor is nonpositive, i.e. the state is at or past blowup.
    #[error("invalid state: {0}")]
    State(String),

    /// An operation was called outside the regime it is defined for.
    #[error("misuse: {0}")]
    Misuse(String),

    /// The configuration cannot be integrated/evaluated as requested.
    #[error("configuration error: {0}")]
    Config(String),

    /// The integrator or a quadrature failed to produce a result.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
