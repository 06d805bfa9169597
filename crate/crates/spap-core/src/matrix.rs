//! Dense row-major `f64` matrices and the numerical kernels built on them.
//!
//! Every public operation validates operand shapes and guarantees that the
//! result contains only finite values. Accumulation order is fixed (plain
//! nested loops, no parallel reductions), so identical inputs produce
//! bitwise-identical outputs on every platform.

use crate::error::{Result, SpapError};

/// Dense 2-D matrix, row-major, 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data. Fails if the length does not
    /// match `rows * cols` or any entry is non-finite.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(SpapError::InvalidMatrix {
                op: "from_vec",
                reason: format!(
                    "data length {} does not match {}x{}",
                    data.len(),
                    rows,
                    cols
                ),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(SpapError::NonFinite { op: "from_vec" });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from nested row slices.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(SpapError::InvalidMatrix {
                op: "from_rows",
                reason: "ragged rows".to_string(),
            });
        }
        Matrix::from_vec(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Row-major backing slice.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// Elementwise sum. Shapes must match.
    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    /// Elementwise difference. Shapes must match.
    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// Elementwise (Hadamard) product. Shapes must match.
    pub fn hadamard(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "hadamard", |a, b| a * b)
    }

    fn zip_with(
        &self,
        other: &Matrix,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(SpapError::shape(op, self.shape(), other.shape()));
        }
        let data: Vec<f64> = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| f(*a, *b))
            .collect();
        if !data.iter().all(|v| v.is_finite()) {
            return Err(SpapError::NonFinite { op });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Scales every entry by `c`.
    pub fn scale(&self, c: f64) -> Result<Matrix> {
        let data: Vec<f64> = self.data.iter().map(|v| v * c).collect();
        if !data.iter().all(|v| v.is_finite()) {
            return Err(SpapError::NonFinite { op: "scale" });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Squared L2 norm of column `j`.
    pub fn col_norm_sq(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self.get(i, j).powi(2)).sum()
    }

    /// L1 norm of column `j`.
    pub fn col_norm_l1(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self.get(i, j).abs()).sum()
    }

    /// L2 norm of row `i`.
    pub fn row_norm(&self, i: usize) -> f64 {
        (0..self.cols)
            .map(|j| self.get(i, j).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// New matrix holding the listed rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Matrix> {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            if i >= self.rows {
                return Err(SpapError::InvalidIndexSet {
                    op: "select_rows",
                    reason: format!("row index {i} out of range for {} rows", self.rows),
                });
            }
            data.extend_from_slice(&self.data[i * self.cols..(i + 1) * self.cols]);
        }
        Ok(Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        })
    }

    /// New matrix holding the listed columns, in the given order.
    pub fn select_cols(&self, idx: &[usize]) -> Result<Matrix> {
        for &j in idx {
            if j >= self.cols {
                return Err(SpapError::InvalidIndexSet {
                    op: "select_cols",
                    reason: format!("column index {j} out of range for {} columns", self.cols),
                });
            }
        }
        let mut data = Vec::with_capacity(idx.len() * self.rows);
        for r in 0..self.rows {
            for &j in idx {
                data.push(self.get(r, j));
            }
        }
        Ok(Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        })
    }

    /// New matrix holding columns `[start, end)`.
    pub fn slice_cols(&self, start: usize, end: usize) -> Result<Matrix> {
        if start > end || end > self.cols {
            return Err(SpapError::InvalidIndexSet {
                op: "slice_cols",
                reason: format!("range {start}..{end} out of bounds for {} columns", self.cols),
            });
        }
        let idx: Vec<usize> = (start..end).collect();
        self.select_cols(&idx)
    }
}

/// Matrix product `a * b` with a fixed i-k-j loop order.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(SpapError::shape("matmul", a.shape(), b.shape()));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            let brow = &b.data[k * b.cols..(k + 1) * b.cols];
            let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for j in 0..b.cols {
                orow[j] += aik * brow[j];
            }
        }
    }
    if !out.data.iter().all(|v| v.is_finite()) {
        return Err(SpapError::NonFinite { op: "matmul" });
    }
    Ok(out)
}

/// Cholesky factor of a symmetric positive definite matrix (lower triangular,
/// stored dense). Fails on a non-positive pivot.
fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.rows;
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(SpapError::NotPositiveDefinite {
                        pivot: i,
                        value: sum,
                    });
                }
                l.set(i, j, sum.sqrt());
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// Solves `a * Z = b` for symmetric positive definite `a` via Cholesky
/// factorization (never an explicit inverse).
///
/// `a` must be square and symmetric within a relative tolerance of `1e-8`;
/// a non-positive-definite pivot surfaces as
/// [`SpapError::NotPositiveDefinite`], which instructs the caller to add a
/// diagonal perturbation and retry.
pub fn spd_solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows != a.cols {
        return Err(SpapError::InvalidMatrix {
            op: "spd_solve",
            reason: format!("matrix is {}x{}, expected square", a.rows, a.cols),
        });
    }
    if b.rows != a.rows {
        return Err(SpapError::shape("spd_solve", a.shape(), b.shape()));
    }
    let scale = a.max_abs();
    let tol = 1e-8 * scale.max(1.0);
    for i in 0..a.rows {
        for j in (i + 1)..a.cols {
            if (a.get(i, j) - a.get(j, i)).abs() > tol {
                return Err(SpapError::InvalidMatrix {
                    op: "spd_solve",
                    reason: format!(
                        "matrix is not symmetric at ({i},{j}): {} vs {}",
                        a.get(i, j),
                        a.get(j, i)
                    ),
                });
            }
        }
    }
    let l = cholesky(a)?;
    let n = a.rows;
    let mut z = Matrix::zeros(n, b.cols);
    // Forward then backward substitution, one right-hand-side column at a time.
    for c in 0..b.cols {
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut sum = b.get(i, c);
            for (k, yk) in y.iter().enumerate().take(i) {
                sum -= l.get(i, k) * yk;
            }
            y[i] = sum / l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut sum = y[i];
            for k in (i + 1)..n {
                sum -= l.get(k, i) * z.get(k, c);
            }
            z.set(i, c, sum / l.get(i, i));
        }
    }
    if !z.data.iter().all(|v| v.is_finite()) {
        return Err(SpapError::NonFinite { op: "spd_solve" });
    }
    Ok(z)
}

/// Half squared Frobenius reconstruction error `0.5 * ||W X - Y||_F^2`.
pub fn frobenius_error(w: &Matrix, x: &Matrix, y: &Matrix) -> Result<f64> {
    let wx = matmul(w, x)?;
    if wx.shape() != y.shape() {
        return Err(SpapError::shape("frobenius_error", wx.shape(), y.shape()));
    }
    let mut sum = 0.0;
    for (a, b) in wx.data.iter().zip(&y.data) {
        let d = a - b;
        sum += d * d;
    }
    Ok(0.5 * sum)
}
