//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the simulation engine.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A sample point fell outside the grid bounding box.
    #[error("point ({0}, {1}, {2}) is outside the grid bounding box")]
    OutOfDomain(f64, f64, f64),

    /// The iterative linear solver did not reach the requested tolerance.
    #[error("linear solver failed to converge: relative residual {residual:.3e} after {iterations} iterations")]
    SolverFailure { residual: f64, iterations: usize },

    /// A field picked up NaN or infinite values.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Root bracketing failed for a scalar equation.
    #[error("root not found: {0}")]
    RootNotFound(String),

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {file}: {message}")]
    Parse { file: String, message: String },
}

impl CoreError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CoreError::InvalidArgument(msg.into())
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CoreError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CoreError::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
