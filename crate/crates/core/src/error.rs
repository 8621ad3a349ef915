use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("index `{0}` is already connected")]
    IndexReused(String),

    #[error("unknown tensor index `{0}`")]
    UnknownIndex(String),

    #[error("quantum-quantum contraction budget of {budget} exceeded")]
    BellBudgetExceeded { budget: usize },

    #[error("measurement strategy {strategy} is incompatible with this tensor: {reason}")]
    IncompatibleStrategy { strategy: &'static str, reason: String },

    #[error("system of {qubits} qubits exceeds the limit of {limit}")]
    SizeExceeded { qubits: usize, limit: usize },

    #[error("structural mismatch: {0}")]
    Structure(String),

    #[error("linear solve failed: {0}")]
    Singular(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
