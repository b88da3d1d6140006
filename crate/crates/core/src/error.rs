use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("unsupported regime: {0}")]
    Unsupported(String),

    #[error("operator is not elliptic: coefficient {index} is {value}")]
    Ellipticity { index: usize, value: f64 },

    #[error("numeric failure: {message} (achieved residual {residual:e})")]
    Numeric { message: String, residual: f64 },

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("evaluation error in `{node}`: {message}")]
    Eval { node: String, message: String },

    #[error(
        "Picard iteration diverged after {iterations} iterations (residual {residual:e}); \
         try epsilon = {suggested_epsilon}"
    )]
    Diverged {
        iterations: usize,
        residual: f64,
        suggested_epsilon: f64,
    },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
