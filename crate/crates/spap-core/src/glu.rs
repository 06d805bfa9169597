//! GLU MLP layers: forward pass and the row/column pruning correspondence.
//!
//! A layer computes `W_down (W_up x ⊙ swish(W_gate x))`. The forward pass
//! decomposes over hidden channels as a sum of rank-1 contributions, so
//! dropping column `i` of `W_down` together with row `i` of `W_up` and
//! `W_gate` removes a channel without introducing any extra error.

use crate::activation::swish;
use crate::error::{Result, SpapError};
use crate::matrix::{matmul, Matrix};

/// One GLU MLP layer: up and gate projections of shape `n x m`, down
/// projection of shape `m x n`, where `n` is the hidden dimension and `m`
/// the model dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct GluLayer {
    w_up: Matrix,
    w_gate: Matrix,
    w_down: Matrix,
}

impl GluLayer {
    pub fn new(w_up: Matrix, w_gate: Matrix, w_down: Matrix) -> Result<Self> {
        let (n, m) = w_up.shape();
        if w_gate.shape() != (n, m) {
            return Err(SpapError::shape("GluLayer::new", w_up.shape(), w_gate.shape()));
        }
        if w_down.shape() != (m, n) {
            return Err(SpapError::shape("GluLayer::new", (m, n), w_down.shape()));
        }
        if n == 0 || m == 0 {
            return Err(SpapError::InvalidMatrix {
                op: "GluLayer::new",
                reason: "layer dimensions must be positive".to_string(),
            });
        }
        Ok(GluLayer { w_up, w_gate, w_down })
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_up.rows()
    }

    pub fn model_dim(&self) -> usize {
        self.w_up.cols()
    }

    pub fn w_up(&self) -> &Matrix {
        &self.w_up
    }

    pub fn w_gate(&self) -> &Matrix {
        &self.w_gate
    }

    pub fn w_down(&self) -> &Matrix {
        &self.w_down
    }

    /// Replaces the down projection, keeping shapes consistent.
    pub fn with_down(&self, w_down: Matrix) -> Result<Self> {
        GluLayer::new(self.w_up.clone(), self.w_gate.clone(), w_down)
    }

    /// Total parameter count: `3 * model_dim * hidden_dim`.
    pub fn param_count(&self) -> u64 {
        (self.w_up.data().len() + self.w_gate.data().len() + self.w_down.data().len()) as u64
    }
}

/// Activations captured from one forward pass.
#[derive(Debug, Clone)]
pub struct ActivationPair {
    /// MLP input, `m x p`.
    pub input: Matrix,
    /// Gated intermediate `(W_up x) ⊙ swish(W_gate x)`, `n x p`.
    pub intermediate: Matrix,
    /// MLP output `W_down * intermediate`, `m x p`.
    pub output: Matrix,
}

/// Forward pass through a GLU layer.
pub fn glu_forward(layer: &GluLayer, x: &Matrix) -> Result<ActivationPair> {
    if x.rows() != layer.model_dim() {
        return Err(SpapError::shape(
            "glu_forward",
            (layer.model_dim(), 0),
            x.shape(),
        ));
    }
    let a = matmul(layer.w_up(), x)?;
    let b = matmul(layer.w_gate(), x)?;
    let gated = Matrix::from_vec(
        b.rows(),
        b.cols(),
        b.data().iter().map(|v| swish(*v)).collect(),
    )?;
    let intermediate = a.hadamard(&gated)?;
    let output = matmul(layer.w_down(), &intermediate)?;
    Ok(ActivationPair {
        input: x.clone(),
        intermediate,
        output,
    })
}

fn validate_keep(op: &'static str, keep: &[usize], n: usize) -> Result<()> {
    if keep.is_empty() {
        return Err(SpapError::EmptyIndexSet { op });
    }
    for pair in keep.windows(2) {
        if pair[1] <= pair[0] {
            return Err(SpapError::InvalidIndexSet {
                op,
                reason: format!("indices must be strictly increasing, got {pair:?}"),
            });
        }
    }
    if *keep.last().unwrap() >= n {
        return Err(SpapError::InvalidIndexSet {
            op,
            reason: format!("index {} out of range for hidden dim {n}", keep.last().unwrap()),
        });
    }
    Ok(())
}

/// Restricts a layer to the given hidden channels: rows of `W_up`/`W_gate`
/// and columns of `W_down` are kept in their original order.
///
/// `keep` must be nonempty, strictly increasing, and within `0..hidden_dim`.
pub fn prune_by_correspondence(layer: &GluLayer, keep: &[usize]) -> Result<GluLayer> {
    validate_keep("prune_by_correspondence", keep, layer.hidden_dim())?;
    GluLayer::new(
        layer.w_up().select_rows(keep)?,
        layer.w_gate().select_rows(keep)?,
        layer.w_down().select_cols(keep)?,
    )
}
