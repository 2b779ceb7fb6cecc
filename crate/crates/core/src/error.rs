use thiserror::Error;

/// Errors produced by the classification library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{requested} qubits exceeds the configured maximum of {max}")]
    SizeCap { requested: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("party index {party} out of range for {n} parties")]
    PartyOutOfRange { party: usize, n: usize },

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("projection has zero success probability (trace {0:e})")]
    ZeroProbability(f64),

    #[error("Hermitian eigensolver did not converge on a {0}x{0} matrix")]
    EigenNonConvergence(usize),

    #[error("state is not separable with respect to split {0}")]
    NotSeparable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
