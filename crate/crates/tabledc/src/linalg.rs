//! Dense row-major linear algebra shared by the whole crate.
//!
//! Everything is 64-bit floating point: Cholesky pivots and the
//! KL terms downstream are sensitive to cancellation, so narrower input
//! formats are widened on load and kept wide from then on.

use thiserror::Error;

/// Errors from the numeric core.
#[derive(Debug, Error, PartialEq)]
pub enum LinAlgError {
    #[error("matrix data length {len} does not match {rows}x{cols}")]
    LengthMismatch {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("non-finite value at row {row}, col {col}")]
    NonFinite { row: usize, col: usize },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: |a[{row},{col}] - a[{col},{row}]| = {delta}")]
    NotSymmetric { row: usize, col: usize, delta: f64 },
    #[error("matrix is not positive-definite: pivot {pivot} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Dense matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data, validating length and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinAlgError> {
        if data.len() != rows * cols {
            return Err(LinAlgError::LengthMismatch {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinAlgError::NonFinite {
                row: pos.checked_div(cols).unwrap_or(0),
                col: pos.checked_rem(cols).unwrap_or(0),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Zero-filled matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix by evaluating `f(row, col)` for every entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Identity scaled by `value`.
    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        Matrix::from_fn(dim, dim, |i, j| if i == j { value } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col] = value;
    }

    /// Row as a contiguous slice.
    pub fn row(&self, row: usize) -> &[f64] {
        let start = row * self.cols;
        &self.data[start..start + self.cols]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        let start = row * self.cols;
        &mut self.data[start..start + self.cols]
    }

    /// Underlying row-major storage.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// True when some entry is NaN or infinite.
    pub fn has_non_finite(&self) -> bool {
        self.data.iter().any(|v| !v.is_finite())
    }

    /// Entrywise map into a new matrix.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Largest absolute entrywise difference to another matrix of the same shape.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Lower-triangular square matrix with strictly positive diagonal.
///
/// Stored densely; entries above the diagonal are kept at exact zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerTriangular {
    dim: usize,
    data: Vec<f64>,
}

impl LowerTriangular {
    /// Validates triangularity and the positive diagonal.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self, LinAlgError> {
        if data.len() != dim * dim {
            return Err(LinAlgError::LengthMismatch {
                rows: dim,
                cols: dim,
                len: data.len(),
            });
        }
        for i in 0..dim {
            for j in 0..dim {
                let v = data[i * dim + j];
                if !v.is_finite() {
                    return Err(LinAlgError::NonFinite { row: i, col: j });
                }
                if j > i && v != 0.0 {
                    return Err(LinAlgError::NotSymmetric {
                        row: i,
                        col: j,
                        delta: v,
                    });
                }
                if j == i && v <= 0.0 {
                    return Err(LinAlgError::NotPositiveDefinite { index: i, pivot: v });
                }
            }
        }
        Ok(LowerTriangular { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.dim && col < self.dim);
        self.data[row * self.dim + col]
    }

    /// Dense copy including the zero upper half.
    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    /// `L * L^T`, the reconstruction used to check a factorization.
    pub fn gram(&self) -> Matrix {
        let n = self.dim;
        Matrix::from_fn(n, n, |i, j| {
            let upto = i.min(j);
            (0..=upto).map(|k| self.get(i, k) * self.get(j, k)).sum()
        })
    }
}

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// Returns the lower factor `L` with `L * L^T = a`. Symmetry is checked
/// to an absolute tolerance of 1e-10; a nonpositive pivot reports the
/// offending index.
pub fn cholesky(a: &Matrix) -> Result<LowerTriangular, LinAlgError> {
    if a.rows() != a.cols() {
        return Err(LinAlgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    for i in 0..n {
        for j in (i + 1)..n {
            let delta = (a.get(i, j) - a.get(j, i)).abs();
            if delta > 1e-10 {
                return Err(LinAlgError::NotSymmetric {
                    row: i,
                    col: j,
                    delta,
                });
            }
        }
    }

    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut diag = a.get(j, j);
        for k in 0..j {
            diag -= l[j * n + k] * l[j * n + k];
        }
        if diag <= 0.0 {
            return Err(LinAlgError::NotPositiveDefinite {
                index: j,
                pivot: diag,
            });
        }
        let pivot = diag.sqrt();
        l[j * n + j] = pivot;
        for i in (j + 1)..n {
            let mut acc = a.get(i, j);
            for k in 0..j {
                acc -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = acc / pivot;
        }
    }
    Ok(LowerTriangular { dim: n, data: l })
}

/// Solves `L * x = b` by forward substitution.
pub fn solve_lower_triangular(l: &LowerTriangular, b: &[f64]) -> Result<Vec<f64>, LinAlgError> {
    if l.dim() != b.len() {
        return Err(LinAlgError::DimensionMismatch {
            left: l.dim(),
            right: b.len(),
        });
    }
    let n = l.dim();
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut acc = b[i];
        for (k, xk) in x.iter().enumerate().take(i) {
            acc -= l.get(i, k) * xk;
        }
        x[i] = acc / l.get(i, i);
    }
    Ok(x)
}

/// Row-wise softmax, stabilized by subtracting the row maximum before
/// exponentiation. Each output row sums to 1.
pub fn row_softmax(m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        let row = m.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let dest = out.row_mut(i);
        let mut sum = 0.0;
        for (d, &v) in dest.iter_mut().zip(row) {
            *d = (v - max).exp();
            sum += *d;
        }
        for d in dest.iter_mut() {
            *d /= sum;
        }
    }
    out
}

/// `a * b` for `a: n x k`, `b: k x m`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.cols(), b.rows(), "inner dimensions must agree");
    let (n, k, m) = (a.rows(), a.cols(), b.cols());
    let mut out = Matrix::zeros(n, m);
    for i in 0..n {
        let arow = a.row(i);
        for (t, &av) in arow.iter().enumerate().take(k) {
            if av == 0.0 {
                continue;
            }
            let brow = b.row(t);
            let orow = out.row_mut(i);
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}
