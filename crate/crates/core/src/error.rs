use alloc::string::String;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter violated its documented invariant. The payload names it.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// An input lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A curve has no resolvable half-maximum crossings.
    #[error("not measurable: {0}")]
    NotMeasurable(String),
    /// Filtering or subtraction left nothing to work with.
    #[error("empty result: {0}")]
    Empty(String),
    /// A state with zero norm cannot be normalized.
    #[error("degenerate state: {0}")]
    DegenerateState(String),
    /// A matrix failed the density-matrix checks beyond tolerance.
    #[error("invalid state: {0}")]
    InvalidState(String),
    /// The measurement operators do not span the operator space.
    #[error("measurement settings are not invertible: {0}")]
    NonInvertible(String),
    /// Counting data carries no information.
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    /// The delay-to-wavelength mapping cannot be inverted.
    #[error("inversion failed: {0}")]
    Inversion(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
