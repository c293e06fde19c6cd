use thiserror::Error;

/// Errors produced by the network algebra, the interpolation builders, the
/// Picard evaluator and the compiler.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension vector {dims:?}: {reason}")]
    InvalidDims { dims: Vec<usize>, reason: &'static str },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("estimated work of {estimated} nodes exceeds the ceiling of {ceiling}")]
    Ceiling { estimated: f64, ceiling: f64 },

    #[error("malformed network file: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
