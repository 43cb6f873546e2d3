use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for extent {extent}")]
    IndexOutOfRange { index: usize, extent: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("invalid boundary-condition pair: {0}")]
    InvalidBcPair(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("axis {axis}: cannot split extent {extent} over {ranks} ranks")]
    OverDecomposed {
        axis: usize,
        extent: usize,
        ranks: usize,
    },

    #[error("topology mismatch: {0}")]
    TopologyMismatch(String),

    #[error("exchange stalled after {0} progress-free iterations")]
    Stalled(usize),

    #[error("transport failure involving rank {rank}: {message}")]
    Transport { rank: usize, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
