use thiserror::Error;

/// Errors raised by MDP construction, validation and evaluation.
#[derive(Debug, Error)]
pub enum MdpError {
    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        actual: usize,
    },

    #[error("{what} is not a probability distribution: sums to {sum} (must be 1 within 1e-12)")]
    NotStochastic { what: String, sum: f64 },

    #[error("{what} has a negative entry {value} at index {index}")]
    NegativeEntry {
        what: String,
        index: usize,
        value: f64,
    },

    #[error("{what} has a non-finite entry at index {index}")]
    NonFinite { what: String, index: usize },

    #[error("discount factor must lie in (0, 1), got {0}")]
    InvalidDiscount(f64),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("failed to parse CMDP instance: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("I/O error reading CMDP instance: {0}")]
    Io(#[from] std::io::Error),
}
