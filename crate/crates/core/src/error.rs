use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("field has {got} values, grid needs {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at cell {0}")]
    NonFinite(usize),

    #[error("negative value {value} at cell {index}")]
    Negative { index: usize, value: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Bisection on the impulse multiplier could not bracket the target.
    #[error("impulse bracket not found: {0}")]
    Bracket(String),

    #[error("malformed VPF data: {0}")]
    Format(String),

    #[error("malformed report: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
