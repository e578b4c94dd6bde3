use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("rank zero")]
    RankZero,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("point {0} outside the punctured disk")]
    Domain(String),
    #[error("matrix not positive definite at {0}")]
    NotPositiveDefinite(String),
    #[error("ill-conditioned metric at {point}: condition number {cond:e}")]
    IllConditioned { point: String, cond: f64 },
    #[error("gauge matrix singular at {0}")]
    SingularGauge(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("non-positive sample {value} at {point}")]
    NonPositive { point: String, value: f64 },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code: 2 for malformed input, 4 for refusals, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_)
            | Error::RankZero
            | Error::InvalidArgument(_)
            | Error::LengthMismatch { .. } => 2,
            Error::Refused(_) => 4,
            _ => 3,
        }
    }
}
