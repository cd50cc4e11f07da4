//! State-feedback gain synthesis and validation of externally supplied
//! gains.
//!
//! Synthesis places closed-loop poles per mode with Ackermann's formula —
//! exact and deterministic for single-input systems — then recovers and
//! verifies the certificate-side factorization the stabilizability
//! conditions are stated in: U_p = P_p⁻¹ and T_p = K_p·U_p, so that
//! K_p = T_p·U_p⁻¹ reproduces the gain. Target poles are fixed functions of
//! the decay rate (reproducibility over optimality): real and distinct, at
//! −(λ_p/2 + 1/2)·{1, 1.5, 2, …} in continuous time and on the positive
//! real axis at √(1−λ_p)·0.8·{1, 0.9, 0.81, …} in discrete time.

use crate::certify::{certify_linear, CertifyError, StabilityCertificate};
use crate::dwell::Scheme;
use crate::linalg::{
    invert, solve_linear, spectral_abscissa, spectral_radius, LinalgError, Matrix, SymmetricMatrix,
};
use crate::model::{ModelError, ModeId, SwitchedSystem, TimeDomain};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("mode {0}: the pair (A, B) is uncontrollable")]
    Uncontrollable(ModeId),
    #[error("synthesis supports single-input systems only; input_dim is {0}")]
    UnsupportedInputDim(usize),
    #[error("mode {0} has no input matrix")]
    MissingInput(ModeId),
    #[error("mode {0} is nonlinear")]
    NonlinearMode(ModeId),
    #[error("gain for mode {mode} must be {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    GainDimension { mode: ModeId, expected_rows: usize, expected_cols: usize, rows: usize, cols: usize },
    #[error("missing gain for mode {0}")]
    MissingGain(ModeId),
    #[error("missing decay rate for mode {0}")]
    MissingLambda(ModeId),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, SynthError>;

/// Pole-placement offset added to λ/2 in continuous time.
const PLACEMENT_DELTA: f64 = 0.5;
/// Spacing ratio between successive continuous-time target poles.
const PLACEMENT_STEP: f64 = 0.5;
/// Radius shrink factor below √(1−λ) in discrete time.
const DISCRETE_SHRINK: f64 = 0.8;
/// Ratio between successive discrete-time target poles.
const DISCRETE_STEP: f64 = 0.9;

/// Gains plus the (U, T) factorization and the closed-loop certificate.
#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub gains: BTreeMap<ModeId, Matrix>,
    /// U_p = P_p⁻¹ from the closed-loop certificate.
    pub u_matrices: BTreeMap<ModeId, SymmetricMatrix>,
    /// T_p = K_p·U_p.
    pub t_matrices: BTreeMap<ModeId, Matrix>,
    pub certificate: StabilityCertificate,
    /// Target closed-loop eigenvalues per mode.
    pub placements: BTreeMap<ModeId, Vec<f64>>,
}

impl SynthesisResult {
    pub fn gains_json(&self) -> String {
        let doc: BTreeMap<String, Vec<Vec<f64>>> =
            self.gains.iter().map(|(k, v)| (k.to_string(), v.to_rows())).collect();
        serde_json::to_string_pretty(&doc).unwrap()
    }
}

/// Parses the gains document {mode: [[row]]}.
pub fn parse_gains(document: &str) -> Result<BTreeMap<ModeId, Matrix>> {
    let doc: BTreeMap<String, Vec<Vec<f64>>> =
        serde_json::from_str(document).map_err(|e| SynthError::Model(ModelError::Json(e)))?;
    let mut out = BTreeMap::new();
    for (key, rows) in doc {
        let id: u32 = key.parse().map_err(|_| {
            SynthError::Model(ModelError::invalid(
                "gains",
                format!("keys must be mode ids, got {key:?}"),
            ))
        })?;
        out.insert(ModeId(id), Matrix::from_rows(&rows)?);
    }
    Ok(out)
}

/// Synthesizes one stabilizing gain per mode so the closed loop meets the
/// decay-rate condition, then certifies it.
pub fn synthesize(
    system: &SwitchedSystem,
    lambda: &BTreeMap<ModeId, f64>,
    scheme: Scheme,
) -> Result<SynthesisResult> {
    if system.input_dim() != 1 {
        return Err(SynthError::UnsupportedInputDim(system.input_dim()));
    }
    let n = system.state_dim();
    let mut gains = BTreeMap::new();
    let mut placements = BTreeMap::new();

    for mode in system.modes() {
        let a = mode.a().ok_or(SynthError::NonlinearMode(mode.id))?;
        let b = mode.b().ok_or(SynthError::MissingInput(mode.id))?;
        let lam = *lambda.get(&mode.id).ok_or(SynthError::MissingLambda(mode.id))?;
        let poles = target_poles(system.time_domain(), lam, n);
        let k = ackermann(a, b, &poles).map_err(|e| match e {
            LinalgError::Singular(_) => SynthError::Uncontrollable(mode.id),
            other => SynthError::Linalg(other),
        })?;
        gains.insert(mode.id, k);
        placements.insert(mode.id, poles);
    }

    let closed = system.close_loop(&gains)?;
    let certificate = certify_linear(&closed, lambda, scheme)?;

    let mut u_matrices = BTreeMap::new();
    let mut t_matrices = BTreeMap::new();
    for (mode, p) in &certificate.p_matrices {
        let u = SymmetricMatrix::new(invert(p.as_matrix())?)?;
        let t = gains[mode].matmul(u.as_matrix());
        u_matrices.insert(*mode, u);
        t_matrices.insert(*mode, t);
    }

    Ok(SynthesisResult { gains, u_matrices, t_matrices, certificate, placements })
}

/// Target closed-loop eigenvalues for a mode with decay rate `lambda`.
pub fn target_poles(time_domain: TimeDomain, lambda: f64, n: usize) -> Vec<f64> {
    match time_domain {
        TimeDomain::Continuous => {
            let base = lambda / 2.0 + PLACEMENT_DELTA;
            (0..n).map(|i| -base * (1.0 + PLACEMENT_STEP * i as f64)).collect()
        }
        TimeDomain::Discrete => {
            let base = (1.0 - lambda).sqrt() * DISCRETE_SHRINK;
            (0..n).map(|i| base * DISCRETE_STEP.powi(i as i32)).collect()
        }
    }
}

/// Ackermann's formula for u = +K·x: with Φ the desired characteristic
/// polynomial, K = −eₙᵀ·C⁻¹·Φ(A) places the eigenvalues of A + B·K at the
/// roots of Φ. Fails on a singular controllability matrix.
fn ackermann(a: &Matrix, b: &Matrix, poles: &[f64]) -> crate::linalg::Result<Matrix> {
    let n = a.rows();
    // Controllability matrix [B AB ... A^{n-1}B].
    let mut ctrl = Matrix::zeros(n, n);
    let mut col = b.clone();
    for j in 0..n {
        for i in 0..n {
            ctrl[(i, j)] = col[(i, 0)];
        }
        col = a.matmul(&col);
    }

    let coeffs = poly_from_roots(poles);
    // Horner evaluation of the monic polynomial at A.
    let mut phi = Matrix::identity(n);
    for &c in coeffs.iter().rev().skip(1) {
        phi = phi.matmul(a).shift(c);
    }

    // Row eₙᵀ·C⁻¹ via Cᵀy = eₙ.
    let mut e_n = Matrix::zeros(n, 1);
    e_n[(n - 1, 0)] = 1.0;
    let y = solve_linear(&ctrl.transpose(), &e_n)?;
    let mut k = Matrix::zeros(1, n);
    for j in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            acc += y[(i, 0)] * phi[(i, j)];
        }
        k[(0, j)] = -acc;
    }
    Ok(k)
}

/// Monic polynomial coefficients, ascending, from real roots.
fn poly_from_roots(roots: &[f64]) -> Vec<f64> {
    let mut coeffs = vec![1.0];
    for &r in roots {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * r;
        }
        coeffs = next;
    }
    coeffs
}

/// Closed-loop stability of one mode under a supplied gain.
#[derive(Debug, Clone, Serialize)]
pub struct GainVerdict {
    pub mode: ModeId,
    /// Spectral abscissa (continuous) or spectral radius (discrete) of
    /// A + B·K.
    pub measure: f64,
    /// Pass when `measure` ≤ this: −λ/2, respectively √(1−λ).
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GainReport {
    pub pass: bool,
    pub modes: Vec<GainVerdict>,
}

impl GainReport {
    pub fn verdict(&self, mode: ModeId) -> Option<&GainVerdict> {
        self.modes.iter().find(|v| v.mode == mode)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "gain validation: {}\n",
            if self.pass { "pass" } else { "FAIL" }
        ));
        out.push_str(&format!("{:<6} {:>14} {:>14} {:>6}\n", "mode", "measure", "limit", "ok"));
        for v in &self.modes {
            out.push_str(&format!(
                "{:<6} {:>14.6} {:>14.6} {:>6}\n",
                v.mode.to_string(),
                v.measure,
                v.limit,
                if v.pass { "yes" } else { "NO" }
            ));
        }
        out
    }
}

/// Margin added to the stability limit so exact boundary placements pass.
const VALIDATION_TOL: f64 = 1e-9;

/// Checks that each closed-loop mode A_p + B_p·K_p meets its decay-rate
/// condition: spectral abscissa ≤ −λ_p/2 in continuous time, spectral
/// radius ≤ √(1−λ_p) in discrete time.
pub fn validate_gains(
    system: &SwitchedSystem,
    gains: &BTreeMap<ModeId, Matrix>,
    lambda: &BTreeMap<ModeId, f64>,
) -> Result<GainReport> {
    let mut verdicts = Vec::with_capacity(system.mode_count());
    for mode in system.modes() {
        let a = mode.a().ok_or(SynthError::NonlinearMode(mode.id))?;
        let b = mode.b().ok_or(SynthError::MissingInput(mode.id))?;
        let k = gains.get(&mode.id).ok_or(SynthError::MissingGain(mode.id))?;
        if k.rows() != system.input_dim() || k.cols() != system.state_dim() {
            return Err(SynthError::GainDimension {
                mode: mode.id,
                expected_rows: system.input_dim(),
                expected_cols: system.state_dim(),
                rows: k.rows(),
                cols: k.cols(),
            });
        }
        let lam = *lambda.get(&mode.id).ok_or(SynthError::MissingLambda(mode.id))?;
        let closed = a.add(&b.matmul(k));
        let (measure, limit) = match system.time_domain() {
            TimeDomain::Continuous => (spectral_abscissa(&closed)?, -lam / 2.0),
            TimeDomain::Discrete => (spectral_radius(&closed)?, (1.0 - lam).sqrt()),
        };
        verdicts.push(GainVerdict {
            mode: mode.id,
            measure,
            limit,
            pass: measure <= limit + VALIDATION_TOL,
        });
    }
    Ok(GainReport { pass: verdicts.iter().all(|v| v.pass), modes: verdicts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::linalg::eigenvalues;
    use crate::model::Mode;
    use approx::assert_abs_diff_eq;

    fn double_integrator() -> SwitchedSystem {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        SwitchedSystem::new(
            TimeDomain::Continuous,
            2,
            1,
            vec![
                Mode::linear(1, a.clone(), Some(b.clone())),
                Mode::linear(2, a.scale(2.0), Some(b)),
            ],
        )
        .unwrap()
    }

    fn lambda_map(values: &[(u32, f64)]) -> BTreeMap<ModeId, f64> {
        values.iter().map(|&(m, l)| (ModeId(m), l)).collect()
    }

    #[test]
    fn double_integrator_placement_by_hand() {
        // lambda = 1: poles {-1, -1.5}, phi(s) = s^2 + 2.5 s + 1.5,
        // C = [B AB] = [[0,1],[1,0]], K = -[1, 0]·phi(A) = -[1.5, 2.5].
        let system = double_integrator();
        let result =
            synthesize(&system, &lambda_map(&[(1, 1.0), (2, 1.0)]), Scheme::Mdadt).unwrap();
        let k = &result.gains[&ModeId(1)];
        assert_abs_diff_eq!(k[(0, 0)], -1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(k[(0, 1)], -2.5, epsilon = 1e-12);
        assert_eq!(result.placements[&ModeId(1)], vec![-1.0, -1.5]);

        let a = system.mode(ModeId(1)).unwrap().a().unwrap();
        let b = system.mode(ModeId(1)).unwrap().b().unwrap();
        let closed = a.add(&b.matmul(k));
        let eigs = eigenvalues(&closed).unwrap();
        assert_abs_diff_eq!(eigs[0].0, -1.5, epsilon = 1e-10);
        assert_abs_diff_eq!(eigs[1].0, -1.0, epsilon = 1e-10);
    }

    #[test]
    fn zero_input_matrix_is_uncontrollable() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let b = Matrix::zeros(2, 1);
        let system = SwitchedSystem::new(
            TimeDomain::Continuous,
            2,
            1,
            vec![Mode::linear(1, a.clone(), Some(b.clone())), Mode::linear(2, a, Some(b))],
        )
        .unwrap();
        let err = synthesize(&system, &lambda_map(&[(1, 1.0), (2, 1.0)]), Scheme::Mdadt)
            .unwrap_err();
        assert!(matches!(err, SynthError::Uncontrollable(m) if m == ModeId(1)));
    }

    #[test]
    fn multi_input_is_unsupported() {
        let a = Matrix::identity(2).scale(-1.0);
        let b = Matrix::identity(2);
        let system = SwitchedSystem::new(
            TimeDomain::Continuous,
            2,
            2,
            vec![Mode::linear(1, a.clone(), Some(b.clone())), Mode::linear(2, a, Some(b))],
        )
        .unwrap();
        assert!(matches!(
            synthesize(&system, &lambda_map(&[(1, 1.0), (2, 1.0)]), Scheme::Mdadt),
            Err(SynthError::UnsupportedInputDim(2))
        ));
    }

    #[test]
    fn factorization_round_trips_to_the_gain() {
        let result = synthesize(&demo::system(), &demo::lambda(), Scheme::Sbasdt).unwrap();
        for (mode, k) in &result.gains {
            let u_inv = invert(result.u_matrices[mode].as_matrix()).unwrap();
            let recovered = result.t_matrices[mode].matmul(&u_inv);
            assert!(
                recovered.sub(k).max_abs() <= 1e-9 * k.max_abs().max(1.0),
                "mode {mode}: recovered {recovered:?} vs {k:?}"
            );
        }
    }

    #[test]
    fn synthesized_closed_loop_certifies() {
        let result = synthesize(&demo::system(), &demo::lambda(), Scheme::Sbasdt).unwrap();
        for margin in result.certificate.decay_margins.values() {
            assert!(*margin <= -1.0 + 1e-8, "decay margin {margin}");
        }
        let closed = demo::system().close_loop(&result.gains).unwrap();
        let report =
            crate::certify::verify_certificate(&closed, &result.certificate, 1e-8).unwrap();
        assert!(report.pass, "{}", report.render());
    }

    #[test]
    fn closed_loop_factorization_inequality() {
        // A_p U_p + B_p T_p + U_p A_pᵀ + T_pᵀ B_pᵀ + λ_p U_p ⪯ 0 for the
        // synthesized factorization (the synthesis-form decay condition).
        let system = demo::system();
        let result = synthesize(&system, &demo::lambda(), Scheme::Sbasdt).unwrap();
        for mode in system.modes() {
            let a = mode.a().unwrap();
            let b = mode.b().unwrap();
            let u = result.u_matrices[&mode.id].as_matrix();
            let t = &result.t_matrices[&mode.id];
            let lam = demo::lambda()[&mode.id];
            let au = a.matmul(u);
            let bt = b.matmul(t);
            let condition = au
                .add(&bt)
                .add(&au.transpose())
                .add(&bt.transpose())
                .add(&u.scale(lam));
            let worst = SymmetricMatrix::new(condition).unwrap().lambda_max();
            assert!(worst <= 1e-8 * u.norm_fro(), "mode {}: {worst}", mode.id);
        }
    }

    #[test]
    fn inverse_ordering_matches_jump_condition() {
        // U_q ⪯ μ_{p|q} U_p is equivalent to P_p ⪯ μ_{p|q} P_q; check both
        // eigenvalue tests agree on every pair.
        let system = demo::system();
        let result = synthesize(&system, &demo::lambda(), Scheme::Sbasdt).unwrap();
        let cert = &result.certificate;
        for (pair, &mu) in &cert.mu_table {
            let p_gap = cert.p_matrices[&pair.to]
                .sub(&cert.p_matrices[&pair.from].scale(mu))
                .lambda_max();
            let u_gap = result.u_matrices[&pair.from]
                .sub(&result.u_matrices[&pair.to].scale(mu))
                .lambda_max();
            let scale = cert.p_matrices[&pair.to].as_matrix().norm_fro().max(1.0);
            assert!(p_gap <= 1e-8 * scale, "pair {pair}: P gap {p_gap}");
            let u_scale = result.u_matrices[&pair.from].as_matrix().norm_fro().max(1.0);
            assert!(u_gap <= 1e-8 * u_scale, "pair {pair}: U gap {u_gap}");
        }
    }

    #[test]
    fn reference_gains_validate() {
        let system = demo::system();
        let lambda = demo::lambda();
        for gains in [demo::gains_sequence_based(), demo::gains_mode_dependent()] {
            let report = validate_gains(&system, &gains, &lambda).unwrap();
            assert!(report.pass, "{}", report.render());
        }
        // Spot values recomputed through the eigenvalue path.
        let report = validate_gains(&system, &demo::gains_sequence_based(), &lambda).unwrap();
        let v1 = report.verdict(ModeId(1)).unwrap();
        assert_abs_diff_eq!(v1.measure, -7.88539, epsilon = 1e-3);
        assert_eq!(v1.limit, -1.5);
        let v3 = report.verdict(ModeId(3)).unwrap();
        assert_abs_diff_eq!(v3.measure, -4.60439, epsilon = 1e-3);
    }

    #[test]
    fn zero_gain_fails_on_unstable_mode() {
        let system = demo::system();
        let mut gains = demo::gains_sequence_based();
        gains.insert(ModeId(1), Matrix::zeros(1, 2));
        let report = validate_gains(&system, &gains, &demo::lambda()).unwrap();
        assert!(!report.pass);
        assert!(!report.verdict(ModeId(1)).unwrap().pass);
    }

    #[test]
    fn gain_dimension_mismatch_is_an_error() {
        let system = demo::system();
        let mut gains = demo::gains_sequence_based();
        gains.insert(ModeId(2), Matrix::zeros(2, 2));
        assert!(matches!(
            validate_gains(&system, &gains, &demo::lambda()),
            Err(SynthError::GainDimension { mode, .. }) if mode == ModeId(2)
        ));
    }

    #[test]
    fn gains_document_round_trip() {
        let result = synthesize(&demo::system(), &demo::lambda(), Scheme::Sbasdt).unwrap();
        let parsed = parse_gains(&result.gains_json()).unwrap();
        assert_eq!(parsed, result.gains);
    }

    #[test]
    fn discrete_synthesis_places_inside_the_radius() {
        let a = Matrix::from_rows(&[vec![1.2, 0.3], vec![0.0, 0.9]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0], vec![0.5]]).unwrap();
        let system = SwitchedSystem::new(
            TimeDomain::Discrete,
            2,
            1,
            vec![
                Mode::linear(1, a.clone(), Some(b.clone())),
                Mode::linear(2, a.scale(0.8), Some(b)),
            ],
        )
        .unwrap();
        let lambda = lambda_map(&[(1, 0.3), (2, 0.3)]);
        let result = synthesize(&system, &lambda, Scheme::Mdadt).unwrap();
        let report = validate_gains(&system, &result.gains, &lambda).unwrap();
        assert!(report.pass, "{}", report.render());
        let expected = (0.7_f64).sqrt() * 0.8;
        assert_abs_diff_eq!(result.placements[&ModeId(1)][0], expected, epsilon = 1e-12);
        assert_abs_diff_eq!(
            result.placements[&ModeId(1)][1],
            expected * 0.9,
            epsilon = 1e-12
        );
    }
}
