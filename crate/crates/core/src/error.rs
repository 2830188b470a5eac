use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("integer overflow in Eisenstein arithmetic")]
    Overflow,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid KS set: {0}")]
    InvalidSet(String),

    #[error("vector {0} is the zero vector")]
    ZeroVector(u32),

    #[error("graph has {n} vertices, limit is {limit}")]
    GraphTooLarge { n: usize, limit: usize },

    #[error(
        "SDP did not converge after {iterations} iterations; certified interval [{lower}, {upper}]"
    )]
    NotConverged {
        iterations: usize,
        lower: f64,
        upper: f64,
    },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("projector {projector} was never sampled")]
    InsufficientSampling { projector: u32 },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    InvalidConfig(Vec<String>),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(err.to_string())
    }
}
