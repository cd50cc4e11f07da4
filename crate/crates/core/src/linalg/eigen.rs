//! Eigensolvers: cyclic Jacobi for symmetric matrices, closed forms for
//! order ≤ 2, and Hessenberg + unshifted QR for general small matrices.

use super::{LinalgError, Matrix, Result, SymmetricMatrix};

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;
const QR_TOL: f64 = 1e-10;
const QR_MAX_ITERS: usize = 10_000;

/// Full spectral decomposition of a symmetric matrix.
///
/// Eigenvalues ascend; `vectors` holds the matching orthonormal eigenvectors
/// as columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenDecomposition {
    /// Reconstruction V·Λ·Vᵀ, for residual checks.
    pub fn reconstruct(&self) -> Matrix {
        let lambda = Matrix::diag(&self.eigenvalues);
        self.vectors.matmul(&lambda).matmul(&self.vectors.transpose())
    }
}

/// Cyclic Jacobi eigensolver.
///
/// Sweeps until the off-diagonal Frobenius mass drops below
/// `1e-12 * ||S||_F`, which it does quadratically; 100 sweeps is far more
/// than these orders ever need.
pub fn sym_eig(s: &SymmetricMatrix) -> EigenDecomposition {
    let n = s.order();
    let mut a = s.as_matrix().clone();
    let mut v = Matrix::identity(n);
    let norm = a.norm_fro().max(f64::MIN_POSITIVE);

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if (2.0 * off).sqrt() <= JACOBI_TOL * norm {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= JACOBI_TOL * norm / (n * n) as f64 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s_rot = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s_rot * akq;
                    a[(k, q)] = s_rot * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s_rot * aqk;
                    a[(q, k)] = s_rot * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s_rot * vkq;
                    v[(k, q)] = s_rot * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, new_col)] = v[(row, old_col)];
        }
    }
    EigenDecomposition { eigenvalues, vectors }
}

/// Eigenvalues of a general real square matrix as (re, im) pairs, sorted by
/// real part ascending, then imaginary part.
///
/// Order ≤ 2 is closed-form; larger orders reduce to Hessenberg form and run
/// unshifted QR with deflation, extracting conjugate pairs from the trailing
/// 2x2 blocks.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<(f64, f64)>> {
    if !a.is_square() {
        return Err(LinalgError::Dimension(format!(
            "eigenvalues require a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    a.check_finite()?;
    let n = a.rows();
    let mut vals = match n {
        1 => vec![(a[(0, 0)], 0.0)],
        2 => eig2(a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]),
        _ => qr_eigenvalues(a)?,
    };
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(vals)
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(a: &Matrix) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().fold(f64::NEG_INFINITY, |m, &(re, _)| m.max(re)))
}

/// Largest modulus over the spectrum.
pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .fold(0.0_f64, |m, &(re, im)| m.max(re.hypot(im))))
}

fn eig2(a: f64, b: f64, c: f64, d: f64) -> Vec<(f64, f64)> {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let root = disc.sqrt();
        vec![(tr / 2.0 - root, 0.0), (tr / 2.0 + root, 0.0)]
    } else {
        let im = (-disc).sqrt();
        vec![(tr / 2.0, -im), (tr / 2.0, im)]
    }
}

/// Householder reduction to upper Hessenberg form (similarity transform).
fn hessenberg(a: &Matrix) -> Matrix {
    let n = a.rows();
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let mut alpha = 0.0;
        for i in k + 1..n {
            alpha += h[(i, k)] * h[(i, k)];
        }
        alpha = alpha.sqrt();
        if alpha == 0.0 {
            continue;
        }
        if h[(k + 1, k)] > 0.0 {
            alpha = -alpha;
        }
        let mut v = vec![0.0; n];
        v[k + 1] = h[(k + 1, k)] - alpha;
        for i in k + 2..n {
            v[i] = h[(i, k)];
        }
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H := (I - 2vvᵀ/vᵀv) H (I - 2vvᵀ/vᵀv)
        for j in 0..n {
            let dot: f64 = (k + 1..n).map(|i| v[i] * h[(i, j)]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k + 1..n {
                h[(i, j)] -= f * v[i];
            }
        }
        for i in 0..n {
            let dot: f64 = (k + 1..n).map(|j| v[j] * h[(i, j)]).sum();
            let f = 2.0 * dot / vnorm2;
            for j in k + 1..n {
                h[(i, j)] -= f * v[j];
            }
        }
    }
    h
}

fn qr_eigenvalues(a: &Matrix) -> Result<Vec<(f64, f64)>> {
    let n = a.rows();
    let mut h = hessenberg(a);
    let scale = h.max_abs().max(f64::MIN_POSITIVE);
    let mut vals: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut hi = n; // active block is rows/cols 0..hi
    let mut iters = 0usize;

    while hi > 0 {
        if hi == 1 {
            vals.push((h[(0, 0)], 0.0));
            break;
        }
        // Deflate any negligible subdiagonal entry in the active block.
        let mut deflated = false;
        for i in (1..hi).rev() {
            let denom = h[(i - 1, i - 1)].abs() + h[(i, i)].abs();
            if h[(i, i - 1)].abs() <= QR_TOL * denom.max(scale * 1e-3) {
                h[(i, i - 1)] = 0.0;
                if i == hi - 1 {
                    vals.push((h[(i, i)], 0.0));
                    hi -= 1;
                    deflated = true;
                    break;
                }
                if i == hi - 2 {
                    vals.extend(eig2(
                        h[(i, i)],
                        h[(i, i + 1)],
                        h[(i + 1, i)],
                        h[(i + 1, i + 1)],
                    ));
                    hi -= 2;
                    deflated = true;
                    break;
                }
            }
        }
        if deflated {
            continue;
        }
        if hi == 2 {
            vals.extend(eig2(h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]));
            break;
        }
        if iters >= QR_MAX_ITERS {
            return Err(LinalgError::NoConvergence(QR_MAX_ITERS));
        }
        iters += 1;
        qr_step(&mut h, hi);
    }
    Ok(vals)
}

/// One unshifted QR iteration on the leading `hi` block of a Hessenberg
/// matrix, using Givens rotations.
fn qr_step(h: &mut Matrix, hi: usize) {
    let mut rotations = Vec::with_capacity(hi - 1);
    for i in 0..hi - 1 {
        let (x, y) = (h[(i, i)], h[(i + 1, i)]);
        let r = x.hypot(y);
        let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (x / r, y / r) };
        rotations.push((c, s));
        for j in i..hi {
            let a = h[(i, j)];
            let b = h[(i + 1, j)];
            h[(i, j)] = c * a + s * b;
            h[(i + 1, j)] = -s * a + c * b;
        }
    }
    for (i, &(c, s)) in rotations.iter().enumerate() {
        for row in 0..(i + 2).min(hi) {
            let a = h[(row, i)];
            let b = h[(row, i + 1)];
            h[(row, i)] = c * a + s * b;
            h[(row, i + 1)] = -s * a + c * b;
        }
    }
}
