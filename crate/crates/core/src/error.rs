use thiserror::Error;

/// Errors raised by the numerical and experiment routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidInput { name: &'static str, reason: String },

    #[error("kl({q} || {p}) is infinite")]
    DivergenceInfinite { q: f64, p: f64 },

    #[error("degenerate point: {0}")]
    DegeneratePoint(String),

    #[error("absolute continuity violated at index {index}")]
    AbsoluteContinuity { index: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("enumeration needs {required} evaluations, above the cap of {cap}")]
    EnumerationCap { required: u128, cap: u128 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidInput { name, reason: reason.into() }
}

pub(crate) fn check_unit(name: &'static str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(name, format!("{x} is outside [0, 1]")));
    }
    Ok(())
}
