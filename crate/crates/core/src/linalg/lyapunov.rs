//! Lyapunov equation solvers and the minimal jump-gain computation.
//!
//! Both solvers vectorize the equation into an n²×n² Kronecker system and
//! solve it directly; at these orders that is simpler than Bartels–Stewart
//! and exactly testable by residual substitution. Stability of the input is
//! decided by the solution itself: with Q ≻ 0, the unique symmetric solution
//! is positive definite exactly when the input matrix is Hurwitz (continuous)
//! or Schur stable (discrete), so no eigensolve is needed on this path.

use super::{
    cholesky, solve::forward_substitute, solve_linear, sym_eig, LinalgError, Matrix, Result,
    SymmetricMatrix,
};

const RESIDUAL_TOL: f64 = 1e-10;

/// Solves AᵀP + PA = −Q for symmetric P ≻ 0.
///
/// Fails with `NotHurwitz` when A admits no positive definite solution.
pub fn solve_lyapunov_continuous(a: &Matrix, q: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    check_inputs(a, q)?;
    let n = a.rows();
    let at = a.transpose();

    // vec(AᵀP + PA) = (I ⊗ Aᵀ + Aᵀ ⊗ I) vec(P), column-major vec; P and Q
    // symmetric, so row-major reads give the same matrices back.
    let mut k = Matrix::zeros(n * n, n * n);
    for col_j in 0..n {
        for row_i in 0..n {
            let eq = col_j * n + row_i;
            for kk in 0..n {
                k[(eq, col_j * n + kk)] += at[(row_i, kk)];
                k[(eq, kk * n + row_i)] += at[(col_j, kk)];
            }
        }
    }
    solve_vectorized(&k, a, q, |p| {
        at.matmul(p.as_matrix()).add(&p.as_matrix().matmul(a))
    })
    .map_err(|e| match e {
        LinalgError::NotPositiveDefinite(_) | LinalgError::Singular(_) => LinalgError::NotHurwitz,
        other => other,
    })
}

/// Solves AᵀPA − P = −Q for symmetric P ≻ 0.
///
/// Fails with `NotSchurStable` when the spectral radius of A is ≥ 1.
pub fn solve_lyapunov_discrete(a: &Matrix, q: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    check_inputs(a, q)?;
    let n = a.rows();
    let at = a.transpose();

    // vec(AᵀPA − P) = (Aᵀ ⊗ Aᵀ − I ⊗ I) vec(P).
    let mut k = Matrix::zeros(n * n, n * n);
    for col_j in 0..n {
        for row_i in 0..n {
            let eq = col_j * n + row_i;
            for pj in 0..n {
                for pi in 0..n {
                    k[(eq, pj * n + pi)] += at[(col_j, pj)] * at[(row_i, pi)];
                }
            }
            k[(eq, col_j * n + row_i)] -= 1.0;
        }
    }
    solve_vectorized(&k, a, q, |p| {
        at.matmul(p.as_matrix()).matmul(a).sub(p.as_matrix())
    })
    .map_err(|e| match e {
        LinalgError::NotPositiveDefinite(_) | LinalgError::Singular(_) => {
            LinalgError::NotSchurStable
        }
        other => other,
    })
}

fn check_inputs(a: &Matrix, q: &SymmetricMatrix) -> Result<()> {
    if !a.is_square() || a.rows() != q.order() {
        return Err(LinalgError::Dimension(format!(
            "A is {}x{}, Q has order {}",
            a.rows(),
            a.cols(),
            q.order()
        )));
    }
    a.check_finite()?;
    let lam_min = q.lambda_min();
    if lam_min <= 0.0 {
        return Err(LinalgError::NotPositiveDefinite(lam_min));
    }
    Ok(())
}

fn solve_vectorized(
    k: &Matrix,
    a: &Matrix,
    q: &SymmetricMatrix,
    operator: impl Fn(&SymmetricMatrix) -> Matrix,
) -> Result<SymmetricMatrix> {
    let n = a.rows();
    let vec_of = |m: &Matrix, sign: f64| {
        let mut v = Matrix::zeros(n * n, 1);
        for col_j in 0..n {
            for row_i in 0..n {
                v[(col_j * n + row_i, 0)] = sign * m[(row_i, col_j)];
            }
        }
        v
    };
    let unvec = |v: &Matrix| {
        let mut m = Matrix::zeros(n, n);
        for col_j in 0..n {
            for row_i in 0..n {
                m[(row_i, col_j)] = v[(col_j * n + row_i, 0)];
            }
        }
        m
    };

    let x = solve_linear(k, &vec_of(q.as_matrix(), -1.0))?;
    let mut p = SymmetricMatrix::new(unvec(&x))?;

    // Iterative refinement: the direct solve is backward stable but can
    // lose digits when ||A|| is large; correcting with the residual
    // restores a true residual at the tolerance.
    let q_norm = q.as_matrix().norm_fro();
    let mut residual = operator(&p).add(q.as_matrix());
    for _ in 0..3 {
        if residual.norm_fro() <= 0.01 * RESIDUAL_TOL * q_norm {
            break;
        }
        let dx = solve_linear(k, &vec_of(&residual, -1.0))?;
        let refined = SymmetricMatrix::new(p.as_matrix().add(&unvec(&dx)))?;
        let refined_residual = operator(&refined).add(q.as_matrix());
        if refined_residual.norm_fro() >= residual.norm_fro() {
            break;
        }
        p = refined;
        residual = refined_residual;
    }

    let lam_min = p.lambda_min();
    if lam_min <= 0.0 {
        return Err(LinalgError::NotPositiveDefinite(lam_min));
    }
    let res_norm = residual.norm_fro();
    if res_norm > RESIDUAL_TOL * q_norm {
        return Err(LinalgError::ResidualTooLarge {
            residual: res_norm,
            tolerance: RESIDUAL_TOL * q_norm,
        });
    }
    Ok(p)
}

/// Smallest μ with P_p ⪯ μ·P_q, i.e. the largest eigenvalue of
/// L⁻¹·P_p·L⁻ᵀ where P_q = L·Lᵀ.
pub fn min_scaling_mu(p_p: &SymmetricMatrix, p_q: &SymmetricMatrix) -> Result<f64> {
    if p_p.order() != p_q.order() {
        return Err(LinalgError::Dimension(format!(
            "orders differ: {} vs {}",
            p_p.order(),
            p_q.order()
        )));
    }
    let lam_p = p_p.lambda_min();
    if lam_p <= 0.0 {
        return Err(LinalgError::NotPositiveDefinite(lam_p));
    }
    let l = cholesky(p_q)?;
    // M = L⁻¹ P_p L⁻ᵀ: forward-substitute twice.
    let y = forward_substitute(&l, p_p.as_matrix());
    let m = forward_substitute(&l, &y.transpose());
    let m = SymmetricMatrix::new(m)?;
    Ok(*sym_eig(&m).eigenvalues.last().unwrap())
}
