//! Direct solvers: Gaussian elimination with partial pivoting and Cholesky.

use super::{LinalgError, Matrix, Result, SymmetricMatrix};

/// Solves A·X = B by LU with partial pivoting. `b` may have any column count.
pub fn solve_linear(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(LinalgError::Dimension(format!(
            "coefficient matrix must be square, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.rows() != b.rows() {
        return Err(LinalgError::Dimension(format!(
            "right-hand side has {} rows, expected {}",
            b.rows(),
            a.rows()
        )));
    }
    let n = a.rows();
    let m = b.cols();
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = lu[(col, col)].abs();
        for row in col + 1..n {
            let v = lu[(row, col)].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = row;
            }
        }
        if pivot_val <= 1e-13 * scale {
            return Err(LinalgError::Singular(pivot_val));
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
            for j in 0..m {
                let tmp = x[(col, j)];
                x[(col, j)] = x[(pivot_row, j)];
                x[(pivot_row, j)] = tmp;
            }
        }
        let pivot = lu[(col, col)];
        for row in col + 1..n {
            let factor = lu[(row, col)] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                let v = lu[(col, j)];
                lu[(row, j)] -= factor * v;
            }
            for j in 0..m {
                let v = x[(col, j)];
                x[(row, j)] -= factor * v;
            }
        }
    }

    for col in (0..n).rev() {
        let pivot = lu[(col, col)];
        for j in 0..m {
            let mut sum = x[(col, j)];
            for k in col + 1..n {
                sum -= lu[(col, k)] * x[(k, j)];
            }
            x[(col, j)] = sum / pivot;
        }
    }
    Ok(x)
}

pub fn invert(a: &Matrix) -> Result<Matrix> {
    solve_linear(a, &Matrix::identity(a.rows()))
}

/// Lower-triangular Cholesky factor L with S = L·Lᵀ.
///
/// Fails with `NotPositiveDefinite` when a pivot is non-positive.
pub fn cholesky(s: &SymmetricMatrix) -> Result<Matrix> {
    let n = s.order();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = s[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(LinalgError::NotPositiveDefinite(sum));
                }
                l[(i, i)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solves L·x = b for lower-triangular L, column by column.
pub fn forward_substitute(l: &Matrix, b: &Matrix) -> Matrix {
    let n = l.rows();
    let m = b.cols();
    let mut x = b.clone();
    for col in 0..n {
        for j in 0..m {
            let mut sum = x[(col, j)];
            for k in 0..col {
                sum -= l[(col, k)] * x[(k, j)];
            }
            x[(col, j)] = sum / l[(col, col)];
        }
    }
    x
}
