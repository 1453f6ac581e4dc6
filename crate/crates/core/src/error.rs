//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by matrix primitives, the optimizer and the data layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric: max |a_ij - a_ji| = {deviation:e} exceeds {tolerance:e}")]
    NotSymmetric { deviation: f64, tolerance: f64 },

    #[error("dimension mismatch in {op}: {detail}")]
    DimensionMismatch { op: &'static str, detail: String },

    #[error("{what} is singular or numerically rank-deficient")]
    Singular { what: &'static str },

    #[error("class {class} has no samples; indicator Gram matrix would be singular")]
    EmptyClass { class: usize },

    #[error("invalid parameter {name}: {detail}")]
    InvalidParam { name: &'static str, detail: String },

    #[error("degenerate projection: {detail}")]
    DegenerateProjection { detail: String },

    #[error("non-finite values produced by {stage}")]
    NonFinite { stage: &'static str },

    #[error("label sequences have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("eigendecomposition did not converge after {sweeps} sweeps")]
    EigNoConvergence { sweeps: usize },

    #[error("csv error in {path}: {detail}")]
    Csv { path: String, detail: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
