use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular over GF(2)")]
    Singular,

    #[error("matrix rank is deficient (no pivot in column {0})")]
    RankDeficient(usize),

    #[error("kernel size {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("phase {got} processed out of order (expected {expected})")]
    PhaseOrder { expected: usize, got: usize },

    #[error("prefix conflicts with decided symbols at position {0}")]
    PrefixConflict(usize),

    #[error("kernel processing incomplete: {0} of {1} phases done")]
    Incomplete(usize, usize),

    #[error("payload has {got} bits, code expects {expected}")]
    PayloadLength { expected: usize, got: usize },

    #[error("invalid code parameters: {0}")]
    InvalidCode(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
