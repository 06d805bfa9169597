//! Penalty method for pruning-mask selection.
//!
//! The bilinear constraint `W diag(s) = 0` of the layer-wise pruning model
//! is replaced by a penalty `(rho/2) * sum_i s_i ||W[:,i]||^2` whose weight
//! grows geometrically. Each iteration rescores channels on the current
//! weight, blends a fresh hard assignment into the relaxed indicator, and
//! re-solves the generalized ridge problem in closed form:
//!
//! `W = Y X^T (X X^T + rho * diag(s) + delta * I)^{-1}`
//!
//! A final hard assignment fixes the mask and the kept columns are refit by
//! unpenalized least squares, so the returned pair is feasible for the
//! original combinatorial model.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpapError};
use crate::matrix::{matmul, spd_solve, Matrix};
use crate::scoring::{composite_score_with, hard_assign, soft_update, PruneAssignment, ScoreNorm};

/// Hyperparameters of the penalty loop.
///
/// `rho_init` and `stabilizer` accept `None` for data-scaled defaults:
/// `0.1 * trace(X X^T) / n` and `1e-8 * mean(diag(X X^T))` respectively,
/// computed when the solve starts. The factor 0.1 keeps the first ridge
/// steps well below the typical Gram curvature so early iterations can
/// still move channels in and out of the candidate set before the growing
/// penalty locks the mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyConfig {
    /// Number of penalty iterations `K`.
    pub iterations: usize,
    /// Score mix `t` between squared-norm and Wanda-style terms, in `[0, 1]`.
    pub score_mix: f64,
    /// Soft-update weight `alpha` in `(0, 1)`.
    pub soft_alpha: f64,
    /// Initial penalty weight; `None` selects `0.1 * trace(X X^T) / n`.
    pub rho_init: Option<f64>,
    /// Geometric growth factor `tau > 1`.
    pub rho_growth: f64,
    /// Diagonal stabilizer `delta >= 0`; `None` selects
    /// `1e-8 * mean(diag(X X^T))`.
    pub stabilizer: Option<f64>,
    /// Activation norm used inside the composite score.
    pub score_norm: ScoreNorm,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            iterations: 15,
            score_mix: 0.5,
            soft_alpha: 0.3,
            rho_init: None,
            rho_growth: 2.0,
            stabilizer: None,
            score_norm: ScoreNorm::FeatureRow,
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(SpapError::InvalidParam {
                name: "penalty.iterations",
                value: self.iterations as f64,
                constraint: "must be at least 1",
            });
        }
        if !(0.0..=1.0).contains(&self.score_mix) {
            return Err(SpapError::InvalidParam {
                name: "penalty.score_mix",
                value: self.score_mix,
                constraint: "must lie in [0, 1]",
            });
        }
        if !(self.soft_alpha > 0.0 && self.soft_alpha < 1.0) {
            return Err(SpapError::InvalidParam {
                name: "penalty.soft_alpha",
                value: self.soft_alpha,
                constraint: "must lie in (0, 1)",
            });
        }
        if let Some(rho) = self.rho_init {
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(SpapError::InvalidParam {
                    name: "penalty.rho_init",
                    value: rho,
                    constraint: "must be positive",
                });
            }
        }
        if !(self.rho_growth > 1.0 && self.rho_growth.is_finite()) {
            return Err(SpapError::InvalidParam {
                name: "penalty.rho_growth",
                value: self.rho_growth,
                constraint: "must exceed 1",
            });
        }
        if let Some(d) = self.stabilizer {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(SpapError::InvalidParam {
                    name: "penalty.stabilizer",
                    value: d,
                    constraint: "must be nonnegative",
                });
            }
        }
        Ok(())
    }
}

/// One trace record per iteration plus the initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyRecord {
    /// Reconstruction objective `0.5 * ||W X - Y||_F^2`.
    pub objective: f64,
    /// Raw penalty sum `sum_i s_i ||W[:,i]||_2^2`.
    pub penalty_sum: f64,
    /// Penalty weight used by this iteration's ridge solve (the initial
    /// record stores `rho^(0)`).
    pub rho: f64,
    /// Hamming distance between this iteration's hard pattern and the
    /// previous one.
    pub hard_flips: usize,
}

/// Diagnostics for a full penalty solve: `iterations + 1` records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyTrace {
    pub records: Vec<PenaltyRecord>,
}

impl PenaltyTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }
}

fn penalty_sum(w: &Matrix, s: &PruneAssignment) -> f64 {
    (0..w.cols())
        .map(|j| s.values()[j] * w.col_norm_sq(j))
        .sum()
}

/// `X X^T + rho * diag(s) + delta * I`, the (n x n) ridge system matrix.
fn ridge_system(x: &Matrix, s: &PruneAssignment, rho: f64, delta: f64) -> Result<Matrix> {
    let mut a = matmul(x, &x.transpose())?;
    let n = a.rows();
    for i in 0..n {
        a.set(i, i, a.get(i, i) + rho * s.values()[i] + delta);
    }
    Ok(a)
}

fn mean_diag_gram(x: &Matrix) -> f64 {
    let n = x.rows();
    if n == 0 {
        return 0.0;
    }
    (0..n).map(|i| x.row_norm(i).powi(2)).sum::<f64>() / n as f64
}

/// Closed-form generalized ridge update
/// `W = Y X^T (X X^T + rho * diag(s) + delta * I)^{-1}`.
///
/// On a non-positive-definite factorization the stabilizer is escalated by
/// a factor of 10 up to three times before the failure is propagated.
pub fn ridge_update(
    x: &Matrix,
    y: &Matrix,
    s: &PruneAssignment,
    rho: f64,
    delta: f64,
) -> Result<Matrix> {
    if s.len() != x.rows() {
        return Err(SpapError::InvalidParam {
            name: "s",
            value: s.len() as f64,
            constraint: "indicator length must match the channel count",
        });
    }
    if y.cols() != x.cols() {
        return Err(SpapError::shape("ridge_update", x.shape(), y.shape()));
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(SpapError::InvalidParam {
            name: "rho",
            value: rho,
            constraint: "must be nonnegative",
        });
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(SpapError::InvalidParam {
            name: "delta",
            value: delta,
            constraint: "must be nonnegative",
        });
    }
    let rhs = matmul(x, &y.transpose())?;
    let mut delta_cur = delta;
    let mut last_err = None;
    for attempt in 0..4 {
        let a = ridge_system(x, s, rho, delta_cur)?;
        match spd_solve(&a, &rhs) {
            Ok(wt) => return Ok(wt.transpose()),
            Err(err @ SpapError::NotPositiveDefinite { .. }) => {
                last_err = Some(err);
                if attempt == 3 {
                    break;
                }
                delta_cur = if delta_cur > 0.0 {
                    delta_cur * 10.0
                } else {
                    1e-10 * mean_diag_gram(x).max(1.0)
                };
            }
            Err(other) => return Err(other),
        }
    }
    Err(last_err.expect("loop exits via error"))
}

/// Unpenalized least-squares refit `W = Y X^T (X X^T)^{-1}`, with the same
/// stabilizer escalation as [`ridge_update`].
pub fn least_squares_refit(x: &Matrix, y: &Matrix) -> Result<Matrix> {
    let zeros = PruneAssignment::new(vec![0.0; x.rows()], 0)?;
    ridge_update(x, y, &zeros, 0.0, 0.0)
}

/// Output of [`penalty_prune`].
#[derive(Debug, Clone)]
pub struct PenaltyOutcome {
    /// Refit weight restricted to the kept columns, `m x (n - lambda)`.
    pub w_pruned: Matrix,
    /// Kept channel indices, ascending.
    pub keep: Vec<usize>,
    /// Per-iteration diagnostics.
    pub trace: PenaltyTrace,
}

/// Penalty method for the layer-wise pruning model: selects `lambda`
/// channels to drop and returns the kept columns refit by least squares.
///
/// `w0` is the original `m x n` weight, `x` the `n x p` input activations,
/// `y` the `m x p` target activations.
pub fn penalty_prune(
    w0: &Matrix,
    x: &Matrix,
    y: &Matrix,
    lambda: usize,
    cfg: &PenaltyConfig,
) -> Result<PenaltyOutcome> {
    cfg.validate()?;
    let n = w0.cols();
    if x.rows() != n {
        return Err(SpapError::shape("penalty_prune", w0.shape(), x.shape()));
    }
    if y.shape() != (w0.rows(), x.cols()) {
        return Err(SpapError::shape("penalty_prune", w0.shape(), y.shape()));
    }
    if lambda == 0 || lambda >= n {
        return Err(SpapError::InvalidParam {
            name: "lambda",
            value: lambda as f64,
            constraint: "must satisfy 0 < lambda < n",
        });
    }

    let gram_trace = (0..n).map(|i| x.row_norm(i).powi(2)).sum::<f64>();
    let mut rho = cfg.rho_init.unwrap_or(0.1 * gram_trace / n as f64);
    if rho <= 0.0 || !rho.is_finite() {
        // Degenerate all-zero activations still need a positive penalty.
        rho = 1.0;
    }
    let delta = cfg.stabilizer.unwrap_or(1e-8 * mean_diag_gram(x));

    let scores0 = composite_score_with(w0, x, cfg.score_mix, cfg.score_norm)?;
    let mut s = hard_assign(&scores0, lambda)?;
    let mut prev_pattern = s.pruned_indices();
    let mut w = w0.clone();

    let mut records = Vec::with_capacity(cfg.iterations + 1);
    records.push(PenaltyRecord {
        objective: crate::matrix::frobenius_error(&w, x, y)?,
        penalty_sum: penalty_sum(&w, &s),
        rho,
        hard_flips: 0,
    });

    for _ in 0..cfg.iterations {
        let scores = composite_score_with(&w, x, cfg.score_mix, cfg.score_norm)?;
        let hard_new = hard_assign(&scores, lambda)?;
        let pattern = hard_new.pruned_indices();
        let flips = pattern
            .iter()
            .filter(|i| !prev_pattern.contains(i))
            .count()
            * 2;
        prev_pattern = pattern;
        s = soft_update(&s, &hard_new, cfg.soft_alpha)?;
        w = ridge_update(x, y, &s, rho, delta)?;
        records.push(PenaltyRecord {
            objective: crate::matrix::frobenius_error(&w, x, y)?,
            penalty_sum: penalty_sum(&w, &s),
            rho,
            hard_flips: flips,
        });
        rho *= cfg.rho_growth;
    }

    // Final hard update on the last penalized weight, then an unpenalized
    // refit on the kept columns only.
    let final_scores = composite_score_with(&w, x, cfg.score_mix, cfg.score_norm)?;
    let s_star = hard_assign(&final_scores, lambda)?;
    let keep = s_star.keep_indices();
    let x_keep = x.select_rows(&keep)?;
    let w_pruned = least_squares_refit(&x_keep, y)?;

    Ok(PenaltyOutcome {
        w_pruned,
        keep,
        trace: PenaltyTrace { records },
    })
}
