use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degree {degree} is not valid in dimension {dim}")]
    InvalidDegree { dim: usize, degree: usize },

    #[error("form is not positive (smallest eigenvalue {margin:e})")]
    NotPositive { margin: f64 },

    #[error("metric is not positive definite")]
    NonPositiveMetric,

    #[error("linear system is numerically singular (condition {condition:e})")]
    Singular { condition: f64 },

    #[error("basis has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("vanishing cycle must have self-pairing -2, got {0}")]
    NotMinusTwo(i64),

    #[error("triple is not hypersymplectic (margin {margin:e})")]
    NotHypersymplectic { margin: f64 },

    #[error("section is not positive at {count} node(s), first {first:?}")]
    NonPositiveSection { count: usize, first: Vec<usize> },

    #[error("node {0:?} is on the boundary")]
    BoundaryNode(Vec<usize>),

    #[error("Gauss lift is not positive at {count} node(s), first {first:?}")]
    NonPositiveGaussLift { count: usize, first: Vec<usize> },

    #[error("curve is not isotropic (residual {0:e})")]
    NotIsotropic(f64),

    #[error("path class does not match the starting vanishing cycle")]
    PathClassMismatch,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(format!("line {} column {}: {}", e.line(), e.column(), e))
    }
}

impl Error {
    /// Stable name of the variant, used as the CLI error code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidDegree { .. } => "InvalidDegree",
            Error::NotPositive { .. } => "NotPositive",
            Error::NonPositiveMetric => "NonPositiveMetric",
            Error::Singular { .. } => "Singular",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::NotMinusTwo(_) => "NotMinusTwo",
            Error::NotHypersymplectic { .. } => "NotHypersymplectic",
            Error::NonPositiveSection { .. } => "NonPositiveSection",
            Error::BoundaryNode(_) => "BoundaryNode",
            Error::NonPositiveGaussLift { .. } => "NonPositiveGaussLift",
            Error::NotIsotropic(_) => "NotIsotropic",
            Error::PathClassMismatch => "PathClassMismatch",
            Error::Invalid(_) => "Invalid",
            Error::Io(_) => "Io",
            Error::Parse(_) => "Parse",
        }
    }
}
