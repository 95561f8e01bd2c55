use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum TtError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dense tensor of {requested} entries exceeds the cap of {cap}")]
    DenseBudget { requested: usize, cap: usize },

    #[error("direction vanishes on the sampling set")]
    DegenerateDirection,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for TtError {
    fn from(e: std::io::Error) -> Self {
        TtError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, TtError>;
