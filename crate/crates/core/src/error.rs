use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("expected a joint over {expected} axes, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("invalid axis selection: {0}")]
    Axes(String),

    #[error("alphabet size mismatch: {0}")]
    SizeMismatch(String),

    #[error("transition row x={row} sums to {sum} (expected 1 within 1e-12)")]
    NotStochastic { row: usize, sum: f64 },

    #[error("negative transition probability {value} in row x={row}")]
    NegativeEntry { row: usize, value: f64 },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("malformed document: {0}")]
    Parse(String),

    #[error("half-plane intersection with the quadrant is unbounded")]
    Unbounded,

    #[error("degenerate half-plane: normal (0, 0)")]
    DegenerateHalfPlane,

    #[error("scale guard exceeded: {0}")]
    ScaleGuard(String),

    #[error("{0} requires a case-3 distribution")]
    WrongCase(&'static str),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
