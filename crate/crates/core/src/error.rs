use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what} = {value} is outside the open unit interval")]
    Domain { what: &'static str, value: f64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("input is empty")]
    Empty,

    #[error("weighted sample has no positive weight")]
    DegenerateSample,

    #[error("degenerate model: {0}")]
    DegenerateModel(&'static str),

    #[error("invalid density: {0}")]
    InvalidDensity(&'static str),

    #[error("invalid state proportions: {0}")]
    InvalidProportions(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
