use thiserror::Error;

/// Errors surfaced by the simulation and training stack.
#[derive(Debug, Error)]
pub enum GfError {
    #[error("simulation diverged: coordinate {index} is {value}")]
    Divergence { index: usize, value: f64 },

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("unknown gait mode index {0}")]
    UnknownMode(usize),

    #[error("non-finite gradient in parameter block '{0}'")]
    NonFiniteGradient(&'static str),

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GfError>;
