use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid bit value {0}")]
    InvalidBit(u8),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid connection polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("demapper protocol violation: {0}")]
    Protocol(String),
    #[error("outside the domain of the bound: {0}")]
    Domain(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("construction unsatisfiable: reached K={achieved} of target {target}")]
    Unsatisfiable { achieved: usize, target: usize },
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
