use thiserror::Error;

/// Errors produced by fitting, sampling and evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("too many knots for exact tour search: {0} (max {max})", max = crate::manifold::tsp::MAX_TOUR_POINTS)]
    TooManyKnots(usize),
    #[error("degenerate knots: ordered knots {0} and {1} coincide")]
    DegenerateKnots(usize, usize),
    #[error("degenerate tangent (norm {0:e})")]
    DegenerateTangent(f64),
    #[error("could only build {built} of {needed} orthonormal frame columns")]
    DegenerateFrame { built: usize, needed: usize },
    #[error("invalid model dimension m={m} for ambient dimension n={n}")]
    InvalidDimension { m: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in input")]
    NonFiniteInput,
    #[error("every landmark has zero likelihood for sample {0}")]
    AllZeroLikelihood(usize),
    #[error("latent law {law} cannot be used with manifold {manifold}")]
    IllegalPair { manifold: String, law: String },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown name: {0}")]
    UnknownName(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
