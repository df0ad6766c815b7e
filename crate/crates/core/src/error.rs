use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("backward requires a scalar output, got shape {0:?}")]
    NotScalarOutput(Vec<usize>),

    #[error("variable {0} does not belong to this tape")]
    UnknownVariable(usize),

    #[error("{op} received a value outside its domain: {value}")]
    Domain { op: &'static str, value: f64 },

    #[error("adaptive quadrature did not converge within depth {depth}")]
    NonConvergence { depth: usize },

    #[error("the 0-1 loss has no gradient; use it for evaluation only")]
    GradientOfZeroOne,

    #[error("label vector is not one-hot: {0:?}")]
    NotOneHot(Vec<f64>),

    #[error("label {label} is not valid here: {reason}")]
    BadLabel { label: String, reason: &'static str },

    #[error("invalid specification: {0}")]
    BadSpec(String),

    #[error("minibatch is empty")]
    EmptyBatch,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid configuration at `{key}`: {reason}")]
    ConfigInvalid { key: String, reason: String },

    #[error("input is within {margin:e} of a non-differentiable surface (needs {required:e})")]
    KinkProximity { margin: f64, required: f64 },

    #[error("vector must be nonzero")]
    ZeroVector,

    #[error("norm exponent must lie in [1, inf], got {0}")]
    BadExponent(f64),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}:{line}: expected {expected} features, found {found}")]
    DimensionMismatch {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}:{line}: unknown label `{label}`")]
    UnknownLabel {
        path: PathBuf,
        line: usize,
        label: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
