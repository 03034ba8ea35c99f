use thiserror::Error;

/// Errors raised by the kernels, the model and the structure readers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An input violates a documented precondition (non-unit direction,
    /// non-orthogonal rotation, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Shapes of features or weights do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An edge has zero length, so no direction can be assigned to it.
    #[error("degenerate edge: {0}")]
    DegenerateEdge(String),

    /// A configuration cannot be used (grid too coarse, inconsistent sizes, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed structure file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Malformed or incompatible checkpoint.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// A NaN or infinity showed up where a finite value was required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
