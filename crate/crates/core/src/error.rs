use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("table length {len} does not match arity {arity} (expected 2^{arity})")]
    LengthMismatch { arity: usize, len: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("degenerate spectrum: total energy is zero")]
    DegenerateSpectrum,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("block length {k} is shorter than the encoder window {window}")]
    BlockTooShort { k: usize, window: usize },

    #[error("block length too large for brute force: {k} > {limit}")]
    BlockTooLarge { k: usize, limit: usize },

    #[error("zero-variance generator: tables are constant")]
    ZeroVariance,

    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),

    #[error("transition matrix is not column-stochastic: {0}")]
    NotStochastic(String),

    #[error("symbol index {index} out of range for {size} inputs")]
    SymbolOutOfRange { index: usize, size: usize },

    #[error("no stable threshold found down to gamma = {floor}")]
    NoStableThreshold { floor: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("query process failed: {0}")]
    Query(String),
}

pub type Result<T> = std::result::Result<T, Error>;
