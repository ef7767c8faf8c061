use std::io;

/// Errors produced by the codec, the point-set readers and the session protocol.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller passed arguments that violate a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The input is valid but outside what this implementation supports.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Bad magic, version or header field in a container.
    #[error("format error: {0}")]
    Format(String),

    /// The arithmetic payload ended before every symbol was decoded.
    #[error("truncated stream")]
    Truncated,

    /// Point-file parse failure.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Malformed or desynchronized session message.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
