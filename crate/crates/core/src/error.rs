//! Crate error type.

use thiserror::Error;

/// Errors produced by validation, numerics, and persistence.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument failed validation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Dimension mismatch between coupled arguments.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Kernel evaluated at (or numerically at) a point of its singular set.
    #[error("singular kernel evaluation: observation point ({x1}, {x2}, 0) meets the fault at ({y1}, {y2}, {y3})")]
    Singularity {
        x1: f64,
        x2: f64,
        y1: f64,
        y2: f64,
        y3: f64,
    },

    /// Assembly failed for a specific parameter triple.
    #[error("operator assembly failed at m = ({a}, {b}, {d}): {source}")]
    Assembly {
        a: f64,
        b: f64,
        d: f64,
        #[source]
        source: Box<Error>,
    },

    /// Iterative training produced a non-finite objective or gradient.
    #[error("training diverged at iteration {iteration}: {detail}")]
    TrainingDiverged { iteration: usize, detail: String },

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A persisted file failed structural validation.
    #[error("format error in {path}: {detail}")]
    Format { path: String, detail: String },

    /// A parse failure at a specific line of a text file.
    #[error("parse error in {path} at line {line}: {detail}")]
    Parse {
        path: String,
        line: usize,
        detail: String,
    },

    /// A cached artifact does not match the requested configuration.
    #[error("cache mismatch in {path}: {detail}")]
    CacheMismatch { path: String, detail: String },
}

impl Error {
    /// Convenience constructor for [`Error::InvalidArgument`].
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Convenience constructor for [`Error::DimensionMismatch`].
    pub fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
