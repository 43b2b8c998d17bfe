use thiserror::Error;

/// Errors raised by the library.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension must be between 1 and {max}, got {found}")]
    InvalidDimension { found: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("integer overflow in multi-index arithmetic")]
    Overflow,

    #[error("{what} must be nonnegative, got {value}")]
    Negative { what: &'static str, value: String },

    #[error("{what}: {lower} is not componentwise <= {upper}")]
    NotDominated {
        what: &'static str,
        lower: String,
        upper: String,
    },

    #[error("derivative order {order} exceeds spline order {max}")]
    DerivativeOrder { order: String, max: String },

    #[error("quadrature order {given} is below the minimum {min}")]
    QuadratureOrder { given: usize, min: usize },

    #[error("non-finite sample {value} at {point:?}")]
    NonFinite { value: f64, point: Vec<f64> },

    #[error("cube at level {level} index {index} is not contained in domain `{domain}`")]
    CubeOutsideDomain {
        level: String,
        index: String,
        domain: String,
    },

    #[error("index {index} is not active at level {level} for domain `{domain}`")]
    InactiveIndex {
        index: String,
        level: String,
        domain: String,
    },

    #[error("level mismatch: expected {expected}, found {found}")]
    LevelMismatch { expected: String, found: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
