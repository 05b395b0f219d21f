use thiserror::Error;

/// Failure categories shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Shapes, grids or handles that do not fit together.
    #[error("structural error: {0}")]
    Structural(String),
    /// A symbol or multiplier produced a non-finite value.
    #[error("numeric domain error: {0}")]
    NumericDomain(String),
    /// An operation was called outside its documented input range.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Invalid experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// An iterative procedure hit its refinement cap.
    #[error("no convergence: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
