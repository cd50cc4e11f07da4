//! Matrix exponential via scaling-and-squaring with a diagonal Padé(6,6)
//! approximant.

use super::{solve_linear, LinalgError, Matrix, Result};

/// Padé(6,6) numerator coefficients for exp; the denominator uses the same
/// coefficients with alternating signs.
const PADE6: [f64; 7] = [
    1.0,
    0.5,
    5.0 / 44.0,
    1.0 / 66.0,
    1.0 / 792.0,
    1.0 / 15_840.0,
    1.0 / 665_280.0,
];

/// Scaling threshold: the approximant is evaluated only once ||A·t||_1 has
/// been halved below this.
const THETA: f64 = 0.5;

/// Computes e^{A·t}.
pub fn expm(a: &Matrix, t: f64) -> Result<Matrix> {
    if !a.is_square() {
        return Err(LinalgError::Dimension(format!(
            "expm requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    a.check_finite()?;
    if !t.is_finite() {
        return Err(LinalgError::Dimension("time must be finite".into()));
    }
    let n = a.rows();
    if t == 0.0 {
        return Ok(Matrix::identity(n));
    }
    let m = a.scale(t);
    let norm = m.norm_1();
    let squarings = if norm > THETA {
        ((norm / THETA).log2().ceil() as u32).min(60)
    } else {
        0
    };
    let scaled = m.scale(0.5_f64.powi(squarings as i32));

    let mut result = pade6(&scaled)?;
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    Ok(result)
}

fn pade6(m: &Matrix) -> Result<Matrix> {
    let n = m.rows();
    let eye = Matrix::identity(n);
    let m2 = m.matmul(m);
    let m4 = m2.matmul(&m2);
    let m6 = m2.matmul(&m4);

    // Odd part U = M·(b1·I + b3·M² + b5·M⁴), even part V = b0·I + b2·M² + b4·M⁴ + b6·M⁶.
    let u_inner = eye
        .scale(PADE6[1])
        .add(&m2.scale(PADE6[3]))
        .add(&m4.scale(PADE6[5]));
    let u = m.matmul(&u_inner);
    let v = eye
        .scale(PADE6[0])
        .add(&m2.scale(PADE6[2]))
        .add(&m4.scale(PADE6[4]))
        .add(&m6.scale(PADE6[6]));

    // exp(M) ≈ (V - U)⁻¹ (V + U)
    solve_linear(&v.sub(&u), &v.add(&u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Truncated Taylor series at small norm; independent accuracy oracle.
    fn expm_taylor(a: &Matrix, terms: usize) -> Matrix {
        let n = a.rows();
        let mut sum = Matrix::identity(n);
        let mut term = Matrix::identity(n);
        for k in 1..=terms {
            term = term.matmul(a).scale(1.0 / k as f64);
            sum = sum.add(&term);
        }
        sum
    }

    #[test]
    fn zero_time_is_identity() {
        let a = Matrix::from_rows(&[vec![3.0, -1.0], vec![7.0, 2.0]]).unwrap();
        assert_eq!(expm(&a, 0.0).unwrap(), Matrix::identity(2));
    }

    #[test]
    fn diagonal_exponentials() {
        let a = Matrix::diag(&[-1.0, -2.0]);
        let e = expm(&a, 1.0).unwrap();
        assert_abs_diff_eq!(e[(0, 0)], (-1.0_f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(e[(1, 1)], (-2.0_f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(e[(0, 1)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn nilpotent_series_terminates() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let e = expm(&a, 1.0).unwrap();
        assert_abs_diff_eq!(e[(0, 0)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e[(0, 1)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e[(1, 0)], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e[(1, 1)], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn matches_taylor_oracle_at_small_norm() {
        let a = Matrix::from_rows(&[vec![0.11, -0.23, 0.04], vec![0.31, 0.02, -0.17], vec![
            -0.05, 0.19, 0.13,
        ]])
        .unwrap();
        let pade = expm(&a, 1.0).unwrap();
        let taylor = expm_taylor(&a, 30);
        assert!(pade.sub(&taylor).max_abs() < 1e-13);
    }

    #[test]
    fn large_norm_requires_scaling() {
        let a = Matrix::from_rows(&[vec![0.0, 40.0], vec![-40.0, 0.0]]).unwrap();
        // Rotation generator: exp(A) = [[cos 40, sin 40], [-sin 40, cos 40]].
        let e = expm(&a, 1.0).unwrap();
        assert_abs_diff_eq!(e[(0, 0)], 40.0_f64.cos(), epsilon = 1e-10);
        assert_abs_diff_eq!(e[(0, 1)], 40.0_f64.sin(), epsilon = 1e-10);
    }
}
