//! Error types shared across the simulator.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An entry index was outside the tracked table range.
    #[error("index {index} out of range for table of {len} entries")]
    IndexOutOfRange { index: usize, len: usize },

    /// Two direction maps of different lengths were combined.
    #[error("direction map length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// A trace line could not be parsed.
    #[error("trace parse error at line {line}: {message}")]
    TraceParse { line: usize, message: String },

    /// A trace violated a structural requirement (e.g. does not begin
    /// with a context-switch marker).
    #[error("malformed trace: {0}")]
    TraceStructure(String),

    /// Interleaving was asked to schedule zero branch events.
    #[error("empty trace: no process has any branch events")]
    EmptyTrace,

    /// A configuration value was rejected.
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }
}
