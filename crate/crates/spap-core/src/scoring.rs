//! Channel scores and the relaxed pruning indicator `s`.
//!
//! The composite score blends squared column norms of the weight with a
//! Wanda-style term coupling the column's L1 norm to the energy of the
//! matching input feature. The indicator vector stays on the simplex
//! `{s in [0,1]^n : sum s = lambda}` during solving; a hard assignment is
//! binary with exactly `lambda` ones marking the channels to prune.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpapError};
use crate::matrix::Matrix;

/// Nonnegative per-channel importance scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    scores: Vec<f64>,
}

impl ScoreVector {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if !scores.iter().all(|s| s.is_finite() && *s >= 0.0) {
            return Err(SpapError::NonFinite { op: "ScoreVector::new" });
        }
        Ok(ScoreVector { scores })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.scores
    }
}

/// Relaxed pruning indicator. Entry `j` close to 1 marks channel `j` for
/// removal; a hard assignment is exactly binary with `target_lambda` ones.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneAssignment {
    values: Vec<f64>,
    target_lambda: usize,
}

impl PruneAssignment {
    pub fn new(values: Vec<f64>, target_lambda: usize) -> Result<Self> {
        if !values.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
            return Err(SpapError::InvalidParam {
                name: "values",
                value: f64::NAN,
                constraint: "every indicator entry must lie in [0, 1]",
            });
        }
        if target_lambda > values.len() {
            return Err(SpapError::InvalidParam {
                name: "target_lambda",
                value: target_lambda as f64,
                constraint: "must not exceed the indicator length",
            });
        }
        Ok(PruneAssignment { values, target_lambda })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn target_lambda(&self) -> usize {
        self.target_lambda
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// True when every entry is exactly 0 or 1 and exactly `target_lambda`
    /// entries are 1.
    pub fn is_hard(&self) -> bool {
        let ones = self.values.iter().filter(|v| **v == 1.0).count();
        self.values.iter().all(|v| *v == 0.0 || *v == 1.0) && ones == self.target_lambda
    }

    /// Indices with value exactly 0, ascending — the channels to keep.
    pub fn keep_indices(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Indices with value exactly 1, ascending — the channels to prune.
    pub fn pruned_indices(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == 1.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Which norm of the calibration activations enters the Wanda term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreNorm {
    /// Norm of input feature `j` across all calibration samples (row `j`
    /// of `X`). The default and the semantically meaningful choice.
    #[default]
    FeatureRow,
    /// Norm of calibration sample `j` (column `j` of `X`). Only defined
    /// when the channel count does not exceed the sample count; kept for
    /// reproduction experiments.
    SampleColumn,
}

/// Composite channel score
/// `t * ||W[:,j]||_2^2 + (1-t) * ||W[:,j]||_1 * ||X[j,:]||_2`
/// with the activation-norm variant selected by `norm`.
pub fn composite_score_with(
    w: &Matrix,
    x: &Matrix,
    t: f64,
    norm: ScoreNorm,
) -> Result<ScoreVector> {
    if !(0.0..=1.0).contains(&t) {
        return Err(SpapError::InvalidParam {
            name: "t",
            value: t,
            constraint: "score mix must lie in [0, 1]",
        });
    }
    if w.cols() != x.rows() {
        return Err(SpapError::shape("composite_score", w.shape(), x.shape()));
    }
    let n = w.cols();
    if norm == ScoreNorm::SampleColumn && n > x.cols() {
        return Err(SpapError::InvalidMatrix {
            op: "composite_score",
            reason: format!(
                "sample-column norm undefined: {n} channels but only {} samples",
                x.cols()
            ),
        });
    }
    let mut scores = Vec::with_capacity(n);
    for j in 0..n {
        let xnorm = match norm {
            ScoreNorm::FeatureRow => x.row_norm(j),
            ScoreNorm::SampleColumn => x.col_norm_sq(j).sqrt(),
        };
        scores.push(t * w.col_norm_sq(j) + (1.0 - t) * w.col_norm_l1(j) * xnorm);
    }
    ScoreVector::new(scores)
}

/// [`composite_score_with`] using the default feature-row activation norm.
pub fn composite_score(w: &Matrix, x: &Matrix, t: f64) -> Result<ScoreVector> {
    composite_score_with(w, x, t, ScoreNorm::FeatureRow)
}

/// Marks the `lambda` smallest-score channels for pruning. Ties break
/// toward the lower index.
pub fn hard_assign(scores: &ScoreVector, lambda: usize) -> Result<PruneAssignment> {
    let n = scores.len();
    if lambda == 0 || lambda >= n {
        return Err(SpapError::InvalidParam {
            name: "lambda",
            value: lambda as f64,
            constraint: "must satisfy 0 < lambda < n",
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores.values()[a]
            .total_cmp(&scores.values()[b])
            .then(a.cmp(&b))
    });
    let mut values = vec![0.0; n];
    for &idx in order.iter().take(lambda) {
        values[idx] = 1.0;
    }
    PruneAssignment::new(values, lambda)
}

/// Soft update `alpha * prev + (1 - alpha) * hard_new`. Preserves the
/// simplex sum when both operands carry it.
pub fn soft_update(
    prev: &PruneAssignment,
    hard_new: &PruneAssignment,
    alpha: f64,
) -> Result<PruneAssignment> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SpapError::InvalidParam {
            name: "alpha",
            value: alpha,
            constraint: "soft update weight must lie in (0, 1)",
        });
    }
    if prev.len() != hard_new.len() || prev.target_lambda() != hard_new.target_lambda() {
        return Err(SpapError::InvalidParam {
            name: "hard_new",
            value: hard_new.len() as f64,
            constraint: "operands must share length and target lambda",
        });
    }
    let values: Vec<f64> = prev
        .values()
        .iter()
        .zip(hard_new.values())
        .map(|(p, h)| alpha * p + (1.0 - alpha) * h)
        .collect();
    PruneAssignment::new(values, prev.target_lambda())
}
