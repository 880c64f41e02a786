//! Small dense row-major matrices and a Householder QR least-squares solver.
//!
//! Least squares is always solved through the QR factorization, never the
//! normal equations: forming `XᵀX` squares the condition number.

// Index loops mirror the factorization's triangular access patterns.
#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from row slices; all rows must share a length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::Argument("ragged matrix rows".into()));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    /// Builds a matrix whose j-th column is `columns[j]`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let c = columns.len();
        let r = columns.first().map_or(0, |col| col.len());
        if columns.iter().any(|col| col.len() != r) {
            return Err(Error::Argument("ragged matrix columns".into()));
        }
        let mut m = Matrix::zeros(r, c);
        for (j, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// The i-th row as a slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Matrix-vector product `self · v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }
}

/// Householder QR factorization of a tall matrix (`rows >= cols`).
///
/// The reflector vectors are stored below the diagonal of the working copy
/// (with the diagonal entry of each reflector kept in place), and R's strict
/// upper triangle in the upper part; R's diagonal lives in `r_diag`.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    packed: Matrix,
    r_diag: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl HouseholderQr {
    pub fn factor(a: &Matrix) -> Result<Self> {
        let (m, p) = (a.rows(), a.cols());
        if m < p {
            return Err(Error::Argument(format!(
                "QR requires rows >= cols, got {m} x {p}"
            )));
        }
        let mut qr = a.clone();
        let mut r_diag = vec![0.0; p];

        for k in 0..p {
            let mut norm_sq = 0.0;
            for i in k..m {
                let v = qr.get(i, k);
                norm_sq += v * v;
            }
            let mut norm = norm_sq.sqrt();
            if norm == 0.0 {
                r_diag[k] = 0.0;
                continue;
            }
            // Sign chosen opposite the pivot to avoid cancellation.
            if qr.get(k, k) > 0.0 {
                norm = -norm;
            }
            for i in k..m {
                qr.set(i, k, qr.get(i, k) / -norm);
            }
            qr.set(k, k, qr.get(k, k) + 1.0);

            for j in (k + 1)..p {
                let mut s = 0.0;
                for i in k..m {
                    s += qr.get(i, k) * qr.get(i, j);
                }
                s = -s / qr.get(k, k);
                for i in k..m {
                    let v = qr.get(i, j) + s * qr.get(i, k);
                    qr.set(i, j, v);
                }
            }
            r_diag[k] = norm;
        }

        Ok(HouseholderQr {
            packed: qr,
            r_diag,
            rows: m,
            cols: p,
        })
    }

    /// Index of the first diagonal of R that is negligible relative to the
    /// largest entry of R, or `None` when the matrix has full column rank.
    ///
    /// The threshold is `|R_kk| <= rel_tol * max |R_ij|`.
    pub fn rank_deficient_column(&self, rel_tol: f64) -> Option<usize> {
        let mut max_abs: f64 = 0.0;
        for i in 0..self.cols {
            max_abs = max_abs.max(self.r_diag[i].abs());
            for j in (i + 1)..self.cols {
                max_abs = max_abs.max(self.packed.get(i, j).abs());
            }
        }
        (0..self.cols).find(|&k| self.r_diag[k].abs() <= rel_tol * max_abs)
    }

    /// Least-squares solution of `min ||A x - b||`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.rows {
            return Err(Error::Argument(format!(
                "rhs length {} does not match {} rows",
                b.len(),
                self.rows
            )));
        }
        let (m, p) = (self.rows, self.cols);
        let mut x = b.to_vec();

        // Qᵀ b via the stored reflectors.
        for k in 0..p {
            let head = self.packed.get(k, k);
            if head == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for i in k..m {
                s += self.packed.get(i, k) * x[i];
            }
            s = -s / head;
            for i in k..m {
                x[i] += s * self.packed.get(i, k);
            }
        }

        // Back substitution on R.
        for i in (0..p).rev() {
            for j in (i + 1)..p {
                x[i] -= self.packed.get(i, j) * x[j];
            }
            if self.r_diag[i] == 0.0 {
                return Err(Error::Internal("division by zero R diagonal".into()));
            }
            x[i] /= self.r_diag[i];
        }
        x.truncate(p);
        Ok(x)
    }

    /// Squared row norms of the thin Q factor: the hat (leverage) values of
    /// the least-squares projection.
    pub fn thin_q_row_sq_norms(&self) -> Vec<f64> {
        let (m, p) = (self.rows, self.cols);
        let mut norms = vec![0.0; m];
        // Build thin Q one column at a time: Q e_j with reflectors applied in
        // reverse order.
        let mut col = vec![0.0; m];
        for j in 0..p {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[j] = 1.0;
            for k in (0..p).rev() {
                let head = self.packed.get(k, k);
                if head == 0.0 {
                    continue;
                }
                let mut s = 0.0;
                for i in k..m {
                    s += self.packed.get(i, k) * col[i];
                }
                s = -s / head;
                for i in k..m {
                    col[i] += s * self.packed.get(i, k);
                }
            }
            for i in 0..m {
                norms[i] += col[i] * col[i];
            }
        }
        norms
    }

    /// `(AᵀA)⁻¹ = R⁻¹ R⁻ᵀ`, computed from the triangular factor.
    pub fn gram_inverse(&self) -> Result<Matrix> {
        let p = self.cols;
        // Invert R (upper triangular) by back substitution on the identity.
        let mut rinv = Matrix::zeros(p, p);
        for col in 0..p {
            let mut x = vec![0.0; p];
            x[col] = 1.0;
            for i in (0..=col).rev() {
                for j in (i + 1)..p {
                    x[i] -= self.packed.get(i, j) * x[j];
                }
                if self.r_diag[i] == 0.0 {
                    return Err(Error::Internal("singular R in gram_inverse".into()));
                }
                x[i] /= self.r_diag[i];
            }
            for i in 0..p {
                rinv.set(i, col, x[i]);
            }
        }
        let mut out = Matrix::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                let mut s = 0.0;
                for k in 0..p {
                    s += rinv.get(i, k) * rinv.get(j, k);
                }
                out.set(i, j, s);
            }
        }
        Ok(out)
    }
}
