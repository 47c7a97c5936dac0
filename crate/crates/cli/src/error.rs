use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    Document { path: PathBuf, source: superpos::Error },

    #[error("{}: {message}", path.display())]
    Config { path: PathBuf, message: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] superpos::Error),
}

impl CliError {
    /// 2 for bad input, 3 for a broken internal invariant.
    pub fn exit_code(&self) -> u8 {
        use superpos::Error as E;
        match self {
            CliError::Core(E::Invariant(_) | E::WrongCase(_) | E::Unbounded | E::DegenerateHalfPlane) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
