use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown function family `{0}`")]
    UnknownFunction(String),
    #[error("function is not symmetric")]
    NotSymmetric,
    #[error("function is constant")]
    ConstantFunction,
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("lp solver failure: {0}")]
    Solver(String),
    #[error("polynomial is not an approximating polynomial: max error {max_error} at input {input}")]
    NotApproximating { max_error: f64, input: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
