use thiserror::Error;

/// Errors raised by the library. Messages carry the measured residual where one exists.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Pauli letter {0:?} (expected one of I, X, Y, Z)")]
    InvalidLetter(char),

    #[error("qubit count {n} out of range 1..={max}")]
    QubitCount { n: usize, max: usize },

    #[error("Pauli index {index} out of range for {n} qubits")]
    IndexOutOfRange { index: u64, n: usize },

    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("imaginary residue {0:e} exceeds tolerance (input is not Hermitian)")]
    ImaginaryResidue(f64),

    #[error("state violates invariant: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("oracle index {index} out of range (m = {m})")]
    OracleIndex { index: u64, m: u64 },

    #[error("failed to parse state: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

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
