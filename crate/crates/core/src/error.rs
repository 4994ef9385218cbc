use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum QacError {
    /// Arguments violate an operation's preconditions.
    #[error("invalid input: {0}")]
    Input(String),

    /// A text file could not be parsed.
    #[error("format error (line {line}): {message}")]
    Format { line: usize, message: String },

    /// The request exceeds a configured size cap.
    #[error("resource limit: {what} is {requested}, cap is {cap}")]
    Resource {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    /// An integrator or solver could not meet its accuracy contract.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// No chain embedding of the requested length exists.
    #[error("no embedding of length {length} exists")]
    NoEmbedding { length: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl QacError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        QacError::Input(msg.into())
    }

    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        QacError::Format {
            line,
            message: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, QacError>;
