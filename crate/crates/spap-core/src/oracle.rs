//! Reference solvers that certify solution quality at desk scale: exhaustive
//! subset enumeration, a magnitude-pruning baseline, and the constructive
//! binarization of relaxed solutions.

use itertools::Itertools;

use crate::error::{Result, SpapError};
use crate::matrix::{frobenius_error, Matrix};
use crate::penalty::least_squares_refit;
use crate::scoring::{composite_score, hard_assign, PruneAssignment};

/// Default cap on the number of enumerated subsets.
pub const DEFAULT_SUBSET_GUARD: u64 = 1_000_000;

/// Result of exhaustive subset enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Globally optimal kept channels, ascending.
    pub best_keep: Vec<usize>,
    /// Objective `0.5 * ||W X_keep - Y||_F^2` at the optimum.
    pub best_objective: f64,
    /// Number of subsets evaluated, `C(n, lambda)`.
    pub evaluated_subsets: u64,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut num: u128 = 1;
    for i in 0..k {
        num = num * (n - i) as u128 / (i + 1) as u128;
    }
    num
}

/// Enumerates every `lambda`-subset of channels to prune, refits the kept
/// rows by least squares, and returns the global minimum. Prune subsets are
/// visited in lexicographic order and ties keep the first minimizer.
pub fn oracle_best_subset_with_guard(
    x: &Matrix,
    y: &Matrix,
    lambda: usize,
    guard: u64,
) -> Result<OracleResult> {
    let n = x.rows();
    if y.cols() != x.cols() {
        return Err(SpapError::shape("oracle_best_subset", x.shape(), y.shape()));
    }
    if lambda >= n {
        return Err(SpapError::InvalidParam {
            name: "lambda",
            value: lambda as f64,
            constraint: "must satisfy 0 <= lambda < n",
        });
    }
    let subsets = binomial(n, lambda);
    if subsets > guard as u128 {
        return Err(SpapError::CombinatorialGuard {
            n,
            lambda,
            subsets,
            limit: guard,
        });
    }

    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut evaluated: u64 = 0;
    for pruned in (0..n).combinations(lambda) {
        let keep: Vec<usize> = (0..n).filter(|i| !pruned.contains(i)).collect();
        let x_keep = x.select_rows(&keep)?;
        let w = least_squares_refit(&x_keep, y)?;
        let obj = frobenius_error(&w, &x_keep, y)?;
        evaluated += 1;
        match &best {
            Some((_, cur)) if obj >= *cur => {}
            _ => best = Some((keep, obj)),
        }
    }
    let (best_keep, best_objective) = best.expect("at least one subset");
    Ok(OracleResult {
        best_keep,
        best_objective,
        evaluated_subsets: evaluated,
    })
}

/// [`oracle_best_subset_with_guard`] at the default guard of one million
/// subsets.
pub fn oracle_best_subset(x: &Matrix, y: &Matrix, lambda: usize) -> Result<OracleResult> {
    oracle_best_subset_with_guard(x, y, lambda, DEFAULT_SUBSET_GUARD)
}

/// Reference baseline: drop the `lambda` smallest-L2-norm columns of `w0`,
/// refit the survivors by least squares, and report the objective.
pub fn magnitude_baseline(
    w0: &Matrix,
    x: &Matrix,
    y: &Matrix,
    lambda: usize,
) -> Result<(Vec<usize>, f64)> {
    // Pure squared-column-norm scores: composite score at t = 1.
    let scores = composite_score(w0, x, 1.0)?;
    let assignment = hard_assign(&scores, lambda)?;
    let keep = assignment.keep_indices();
    let x_keep = x.select_rows(&keep)?;
    let w = least_squares_refit(&x_keep, y)?;
    let obj = frobenius_error(&w, &x_keep, y)?;
    Ok((keep, obj))
}

const FEASIBILITY_TOL: f64 = 1e-10;

/// Constructive binarization of a feasible relaxed solution: picks the
/// lowest-index `lambda`-subset of `supp(s)` and returns the binary
/// indicator supported there. Because the weight is untouched, the
/// reconstruction objective is preserved exactly.
///
/// Preconditions checked: `s` in `[0,1]^n` with `sum(s) == lambda`,
/// `w diag(s) == 0` within `1e-10`, and `|supp(s)| >= lambda`.
pub fn theorem1_roundtrip(w: &Matrix, s: &[f64], lambda: usize) -> Result<PruneAssignment> {
    let n = w.cols();
    if s.len() != n {
        return Err(SpapError::Infeasible {
            reason: format!("indicator length {} does not match {n} columns", s.len()),
        });
    }
    if !s.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
        return Err(SpapError::Infeasible {
            reason: "indicator entries must lie in [0, 1]".to_string(),
        });
    }
    let sum: f64 = s.iter().sum();
    if (sum - lambda as f64).abs() > 1e-9 {
        return Err(SpapError::Infeasible {
            reason: format!("sum(s) = {sum} but lambda = {lambda}"),
        });
    }
    for (j, &sj) in s.iter().enumerate() {
        if sj > 0.0 {
            for i in 0..w.rows() {
                if (w.get(i, j) * sj).abs() > FEASIBILITY_TOL {
                    return Err(SpapError::Infeasible {
                        reason: format!(
                            "bilinear constraint violated at column {j}: |w[{i},{j}] * s[{j}]| = {}",
                            (w.get(i, j) * sj).abs()
                        ),
                    });
                }
            }
        }
    }
    let support: Vec<usize> = (0..n).filter(|&j| s[j] > 0.0).collect();
    if support.len() < lambda {
        return Err(SpapError::Infeasible {
            reason: format!("support size {} is below lambda = {lambda}", support.len()),
        });
    }
    let chosen = &support[..lambda];
    // The chosen columns must themselves vanish for the binary point to be
    // feasible.
    for &j in chosen {
        for i in 0..w.rows() {
            if w.get(i, j).abs() > FEASIBILITY_TOL {
                return Err(SpapError::Infeasible {
                    reason: format!(
                        "column {j} in the selected support is not zero: |w[{i},{j}]| = {}",
                        w.get(i, j).abs()
                    ),
                });
            }
        }
    }
    let mut values = vec![0.0; n];
    for &j in chosen {
        values[j] = 1.0;
    }
    PruneAssignment::new(values, lambda)
}
