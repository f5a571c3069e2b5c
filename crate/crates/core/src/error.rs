use alloc::string::String;
use core::fmt;

/// Errors shared across the core modules.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied argument violated a precondition.
    InvalidArgument(String),
    /// Tensor/spectrogram dimensions do not line up.
    Shape(String),
    /// Stored state (switches, weight blobs) is internally inconsistent.
    Corrupt(String),
    /// Training produced a non-finite loss; the payload is the epoch index.
    Diverged { epoch: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Shape(msg) => write!(f, "shape mismatch: {msg}"),
            Error::Corrupt(msg) => write!(f, "corrupt state: {msg}"),
            Error::Diverged { epoch } => write!(f, "non-finite loss at epoch {epoch}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
