use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or geometry argument is outside its valid domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Two fields or masks that must share a grid do not.
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch { expected: (usize, usize), actual: (usize, usize) },

    /// Reading or writing an image failed.
    #[error("{}: {reason}", path.display())]
    Io { path: PathBuf, reason: String },

    /// The level set became non-finite during evolution.
    #[error("numerical divergence at iteration {iteration}")]
    Divergence { iteration: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_same_dims(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
