//! Dense real linear algebra on small matrices.
//!
//! Everything in this module is sized for the state dimensions that show up
//! in switched-system analysis (n up to a few tens): plain row-major storage,
//! direct solvers, and unconditionally robust iterations. There are no blocked
//! kernels and no external BLAS/LAPACK.

mod eigen;
mod expm;
mod lyapunov;
mod solve;

pub use eigen::{eigenvalues, spectral_abscissa, spectral_radius, sym_eig, EigenDecomposition};
pub use expm::expm;
pub use lyapunov::{min_scaling_mu, solve_lyapunov_continuous, solve_lyapunov_discrete};
pub use solve::{cholesky, invert, solve_linear};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Index, IndexMut};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix entry ({0}, {1}) is not finite")]
    NonFinite(usize, usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite (smallest eigenvalue {0:.6e})")]
    NotPositiveDefinite(f64),
    #[error("matrix is not Hurwitz: no positive definite Lyapunov solution exists")]
    NotHurwitz,
    #[error("matrix is not Schur stable: no positive definite Lyapunov solution exists")]
    NotSchurStable,
    #[error("linear system is singular or near-singular (pivot {0:.3e})")]
    Singular(f64),
    #[error("iteration failed to converge within {0} steps")]
    NoConvergence(usize),
    #[error("residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Dense real matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Matrix::zeros(order, order);
        for i in 0..order {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Matrix::zeros(entries.len(), entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds from nested rows, checking rectangularity and finiteness.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(LinalgError::Dimension("matrix must be non-empty".into()));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(LinalgError::Dimension(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    cols
                )));
            }
            data.extend_from_slice(row);
        }
        let m = Matrix { rows: rows.len(), cols, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                rows * cols,
                rows,
                cols,
                data.len()
            )));
        }
        let m = Matrix { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn check_finite(&self) -> Result<()> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if !self[(i, j)].is_finite() {
                    return Err(LinalgError::NonFinite(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul dimension mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "apply dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self[(i, j)] * x[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Matrix {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= c;
        }
        out
    }

    /// `self + c * I`.
    pub fn shift(&self, c: f64) -> Matrix {
        assert!(self.is_square(), "shift requires a square matrix");
        let mut out = self.clone();
        for i in 0..self.rows {
            out[(i, i)] += c;
        }
        out
    }

    fn zip(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        let mut out = self.clone();
        for (v, &w) in out.data.iter_mut().zip(&other.data) {
            *v = f(*v, w);
        }
        out
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        let mut best = 0.0_f64;
        for j in 0..self.cols {
            let mut sum = 0.0;
            for i in 0..self.rows {
                sum += self[(i, j)].abs();
            }
            best = best.max(sum);
        }
        best
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max_asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = LinalgError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(&rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

/// Square matrix that is exactly symmetric in storage.
///
/// Built by symmetrizing the input, so `s[(i,j)] == s[(j,i)]` holds bitwise.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymmetricMatrix {
    inner: Matrix,
}

impl SymmetricMatrix {
    /// Symmetrizes `m` as (M + Mᵀ)/2. Rejects inputs that are visibly
    /// non-symmetric relative to their magnitude.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(LinalgError::Dimension(format!(
                "symmetric matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        m.check_finite()?;
        let skew = m.max_asymmetry();
        let scale = m.max_abs().max(1.0);
        if skew > 1e-8 * scale {
            return Err(LinalgError::NotSymmetric(skew));
        }
        let mut s = m;
        for i in 0..s.rows {
            for j in 0..i {
                let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
        }
        Ok(SymmetricMatrix { inner: s })
    }

    pub fn identity(order: usize) -> Self {
        SymmetricMatrix { inner: Matrix::identity(order) }
    }

    pub fn diag(entries: &[f64]) -> Self {
        SymmetricMatrix { inner: Matrix::diag(entries) }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        SymmetricMatrix::new(Matrix::from_rows(rows)?)
    }

    pub fn order(&self) -> usize {
        self.inner.rows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix {
        self.inner
    }

    pub fn scale(&self, c: f64) -> SymmetricMatrix {
        SymmetricMatrix { inner: self.inner.scale(c) }
    }

    pub fn sub(&self, other: &SymmetricMatrix) -> SymmetricMatrix {
        SymmetricMatrix { inner: self.inner.sub(&other.inner) }
    }

    /// Quadratic form xᵀSx.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let sx = self.inner.apply(x);
        x.iter().zip(&sx).map(|(a, b)| a * b).sum()
    }

    /// Smallest eigenvalue.
    pub fn lambda_min(&self) -> f64 {
        sym_eig(self).eigenvalues[0]
    }

    /// Largest eigenvalue.
    pub fn lambda_max(&self) -> f64 {
        *sym_eig(self).eigenvalues.last().unwrap()
    }
}

impl Index<(usize, usize)> for SymmetricMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.inner[idx]
    }
}

impl fmt::Debug for SymmetricMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Symmetric{:?}", self.inner)
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymmetricMatrix {
    type Error = LinalgError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymmetricMatrix::from_rows(&rows)
    }
}

impl From<SymmetricMatrix> for Vec<Vec<f64>> {
    fn from(s: SymmetricMatrix) -> Self {
        s.inner.to_rows()
    }
}

/// True iff the smallest eigenvalue of `s` exceeds `margin`.
pub fn is_positive_definite(s: &SymmetricMatrix, margin: f64) -> bool {
    s.lambda_min() > margin
}
