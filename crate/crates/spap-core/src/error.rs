//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, SpapError>;

/// Errors raised by the pruning library.
#[derive(Debug, Error)]
pub enum SpapError {
    /// Two operands have incompatible shapes for the requested operation.
    #[error("{op}: shape mismatch, left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    ShapeMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    /// A matrix failed a structural requirement (squareness, symmetry, size).
    #[error("{op}: {reason}")]
    InvalidMatrix { op: &'static str, reason: String },

    /// An operation produced or received a non-finite value.
    #[error("{op}: non-finite value encountered")]
    NonFinite { op: &'static str },

    /// Cholesky factorization hit a non-positive pivot. The matrix is not
    /// positive definite; add a diagonal perturbation `delta * I` and retry.
    #[error(
        "factorization failed: non-positive-definite pivot at index {pivot} \
         (value {value:e}); add a diagonal perturbation delta*I and retry"
    )]
    NotPositiveDefinite { pivot: usize, value: f64 },

    /// A scalar parameter fell outside its documented range.
    #[error("parameter `{name}` = {value} violates constraint: {constraint}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// An index-set argument was empty where at least one index is required.
    #[error("{op}: empty index set")]
    EmptyIndexSet { op: &'static str },

    /// An index-set entry is out of range or the set is not strictly increasing.
    #[error("{op}: invalid index set: {reason}")]
    InvalidIndexSet { op: &'static str, reason: String },

    /// The subset-enumeration oracle would exceed its combinatorial guard.
    #[error("subset enumeration guard exceeded: C({n}, {lambda}) = {subsets} > limit {limit}")]
    CombinatorialGuard {
        n: usize,
        lambda: usize,
        subsets: u128,
        limit: u64,
    },

    /// Input violates the feasibility preconditions of the relaxed model.
    #[error("infeasible input: {reason}")]
    Infeasible { reason: String },

    /// A configuration file or value is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// A persisted file has an invalid or corrupt format.
    #[error("format error: {0}")]
    Format(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl SpapError {
    pub(crate) fn shape(
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    ) -> Self {
        SpapError::ShapeMismatch {
            op,
            left_rows: left.0,
            left_cols: left.1,
            right_rows: right.0,
            right_cols: right.1,
        }
    }
}
