use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coordinate {0} is not a finite value in [0, 1]")]
    OutOfUnitCube(f64),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The instance exceeds a size guard (e.g. exact star discrepancy).
    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("missing parameter `{param}` for bound {bound}")]
    MissingParameter { param: &'static str, bound: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("malformed point file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
