//! Stability certification of switched linear systems.
//!
//! For each mode a quadratic Lyapunov function V_p(x) = xᵀP_p x is
//! constructed so that V decays at rate λ_p while the mode runs, and the
//! jump V_p ≤ μ_{p|q} V_q at a switch into p from q is bounded by the
//! smallest feasible gain. Feasibility is decided exactly: the decay
//! inequality AᵀP + PA ⪯ −λP admits a solution precisely when the shifted
//! matrix A + (λ/2)I is Hurwitz, in which case the shifted Lyapunov equation
//! with Q = I produces one with strict slack (discrete analog via the
//! 1/√(1−λ) scaling). The resulting P is one feasible choice, not an
//! optimized one; μ and the derived thresholds inherit that.

use crate::dwell::{DwellError, DwellPolicy, MuSpec, Scheme, ThresholdTable};
use crate::linalg::{
    eigenvalues, min_scaling_mu, solve_lyapunov_continuous, solve_lyapunov_discrete, sym_eig,
    LinalgError, Matrix, SymmetricMatrix,
};
use crate::model::{ModelError, ModeId, OrderedPair, SwitchedSystem, SwitchingSignal, TimeDomain};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error(
        "mode {mode} cannot decay at rate lambda = {lambda}: the margin test \
         fails with offending eigenvalue {eigenvalue:.6}"
    )]
    Infeasible { mode: ModeId, lambda: f64, eigenvalue: f64 },
    #[error("mode {0} is nonlinear; only linear modes can be certified")]
    NonlinearMode(ModeId),
    #[error("certificate does not match the system: {0}")]
    Mismatch(String),
    #[error("no jump gain for observed pair {0}")]
    MissingMu(OrderedPair),
    #[error("missing decay rate for mode {0}")]
    MissingLambda(ModeId),
    #[error("time {0} is outside the signal horizon [0, {1}]")]
    TimeOutOfRange(f64, f64),
    #[error("initial Lyapunov value must be positive, got {0}")]
    BadInitialValue(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Dwell(#[from] DwellError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("certificate document is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CertifyError>;

/// Default absolute eigenvalue tolerance for certificate verification,
/// scaled by the magnitude of the matrices involved.
pub const VERIFY_TOL: f64 = 1e-8;

/// Coefficients of the quadratic sandwich
/// k₁‖x‖² ≤ V(x) ≤ k₂‖x‖², i.e. the extreme eigenvalues of P.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassKBounds {
    pub k1: f64,
    pub k2: f64,
}

/// Per-mode Lyapunov matrices with verified decay margins, the minimal jump
/// gains between modes, and the dwell-time thresholds they imply.
#[derive(Debug, Clone)]
pub struct StabilityCertificate {
    pub scheme: Scheme,
    pub time_domain: TimeDomain,
    pub lambda: BTreeMap<ModeId, f64>,
    pub p_matrices: BTreeMap<ModeId, SymmetricMatrix>,
    /// Minimal feasible μ_{p|q}, floored at 1.
    pub mu_table: BTreeMap<OrderedPair, f64>,
    pub thresholds: ThresholdTable,
    /// Most positive eigenvalue of the decay condition per mode (≤ 0 when
    /// the condition holds).
    pub decay_margins: BTreeMap<ModeId, f64>,
    /// Most positive eigenvalue of P_p − μ_{p|q}P_q per pair.
    pub jump_margins: BTreeMap<OrderedPair, f64>,
    pub class_k: BTreeMap<ModeId, ClassKBounds>,
    pub metadata: SolverMetadata,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverMetadata {
    /// Right-hand side of the Lyapunov solves.
    pub q_choice: String,
    pub verification_tol: f64,
}

impl StabilityCertificate {
    pub fn state_dim(&self) -> usize {
        self.p_matrices.values().next().map(SymmetricMatrix::order).unwrap_or(0)
    }

    pub fn mu(&self, pair: OrderedPair) -> Option<f64> {
        self.mu_table.get(&pair).copied()
    }

    /// Lyapunov value V_p(x) = xᵀP_p x.
    pub fn lyapunov_value(&self, mode: ModeId, x: &[f64]) -> Result<f64> {
        let p = self.p_matrices.get(&mode).ok_or(CertifyError::MissingLambda(mode))?;
        Ok(p.quad_form(x))
    }

    pub fn to_json(&self) -> String {
        let doc = CertificateDoc {
            scheme: self.scheme,
            time_domain: self.time_domain,
            lambda: stringify_mode_map(&self.lambda),
            p: self
                .p_matrices
                .iter()
                .map(|(k, v)| (k.to_string(), v.as_matrix().to_rows()))
                .collect(),
            mu: stringify_pair_map(&self.mu_table),
            thresholds: Some(serde_json::to_value(&self.thresholds).unwrap()),
            decay_margins: stringify_mode_map(&self.decay_margins),
            jump_margins: stringify_pair_map(&self.jump_margins),
            class_k: self.class_k.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            metadata: self.metadata.clone(),
        };
        serde_json::to_string_pretty(&doc).unwrap()
    }

    /// Parses a certificate document. Thresholds are recomputed from the
    /// scheme, decay rates, and jump gains rather than trusted.
    pub fn from_json(document: &str) -> Result<Self> {
        let doc: CertificateDoc = serde_json::from_str(document)?;
        let lambda = parse_mode_map(&doc.lambda)?;
        let mu_table = parse_pair_map(&doc.mu)?;
        let mut p_matrices = BTreeMap::new();
        for (key, rows) in &doc.p {
            let id: u32 = key.parse().map_err(|_| {
                CertifyError::Mismatch(format!("P key {key:?} is not a mode id"))
            })?;
            p_matrices.insert(ModeId(id), SymmetricMatrix::from_rows(rows)?);
        }
        let thresholds =
            policy_for(doc.scheme, doc.time_domain, &lambda, &mu_table)?.threshold_table()?;
        let mut class_k = BTreeMap::new();
        for (key, v) in &doc.class_k {
            let id: u32 = key.parse().map_err(|_| {
                CertifyError::Mismatch(format!("class_k key {key:?} is not a mode id"))
            })?;
            class_k.insert(ModeId(id), *v);
        }
        Ok(StabilityCertificate {
            scheme: doc.scheme,
            time_domain: doc.time_domain,
            lambda,
            p_matrices,
            mu_table,
            thresholds,
            decay_margins: parse_mode_map(&doc.decay_margins)?,
            jump_margins: parse_pair_map(&doc.jump_margins)?,
            class_k,
            metadata: doc.metadata,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CertificateDoc {
    scheme: Scheme,
    time_domain: TimeDomain,
    lambda: BTreeMap<String, f64>,
    p: BTreeMap<String, Vec<Vec<f64>>>,
    mu: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    thresholds: Option<serde_json::Value>,
    decay_margins: BTreeMap<String, f64>,
    jump_margins: BTreeMap<String, f64>,
    class_k: BTreeMap<String, ClassKBounds>,
    metadata: SolverMetadata,
}

fn stringify_mode_map(map: &BTreeMap<ModeId, f64>) -> BTreeMap<String, f64> {
    map.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn stringify_pair_map(map: &BTreeMap<OrderedPair, f64>) -> BTreeMap<String, f64> {
    map.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn parse_mode_map(map: &BTreeMap<String, f64>) -> Result<BTreeMap<ModeId, f64>> {
    let mut out = BTreeMap::new();
    for (key, v) in map {
        let id: u32 = key
            .parse()
            .map_err(|_| CertifyError::Mismatch(format!("key {key:?} is not a mode id")))?;
        out.insert(ModeId(id), *v);
    }
    Ok(out)
}

fn parse_pair_map(map: &BTreeMap<String, f64>) -> Result<BTreeMap<OrderedPair, f64>> {
    let mut out = BTreeMap::new();
    for (key, v) in map {
        out.insert(OrderedPair::parse_key(key)?, *v);
    }
    Ok(out)
}

/// Builds the dwell policy a certificate implies; mode- and global-keyed
/// schemes collapse the pair gains conservatively.
fn policy_for(
    scheme: Scheme,
    time_domain: TimeDomain,
    lambda: &BTreeMap<ModeId, f64>,
    mu_table: &BTreeMap<OrderedPair, f64>,
) -> Result<DwellPolicy> {
    Ok(DwellPolicy::new(
        scheme,
        time_domain,
        lambda.clone(),
        MuSpec::PerPair(mu_table.clone()),
    )?)
}

/// Certifies every mode of an autonomous (or already closed-loop) linear
/// switched system at the given decay rates.
///
/// Continuous time: requires A_p + (λ_p/2)I Hurwitz, then solves
/// (A_p + (λ_p/2)I)ᵀP + P(A_p + (λ_p/2)I) = −I. Discrete time: requires
/// ρ(A_p/√(1−λ_p)) < 1 and solves the scaled discrete equation. Infeasible
/// modes are reported with the offending eigenvalue; that signals λ_p is
/// too aggressive for the mode.
pub fn certify_linear(
    system: &SwitchedSystem,
    lambda: &BTreeMap<ModeId, f64>,
    scheme: Scheme,
) -> Result<StabilityCertificate> {
    let time_domain = system.time_domain();
    let identity = SymmetricMatrix::identity(system.state_dim());
    let mut p_matrices = BTreeMap::new();
    let mut decay_margins = BTreeMap::new();
    let mut class_k = BTreeMap::new();

    for mode in system.modes() {
        let a = mode.a().ok_or(CertifyError::NonlinearMode(mode.id))?;
        let lam = *lambda.get(&mode.id).ok_or(CertifyError::MissingLambda(mode.id))?;
        let p = match time_domain {
            TimeDomain::Continuous => {
                let shifted = a.shift(lam / 2.0);
                solve_lyapunov_continuous(&shifted, &identity).map_err(|e| match e {
                    LinalgError::NotHurwitz => CertifyError::Infeasible {
                        mode: mode.id,
                        lambda: lam,
                        eigenvalue: worst_real_part(&shifted),
                    },
                    other => CertifyError::Linalg(other),
                })?
            }
            TimeDomain::Discrete => {
                if !(lam > 0.0 && lam < 1.0) {
                    return Err(CertifyError::Dwell(DwellError::LambdaOutOfRange(lam)));
                }
                let scaled = a.scale(1.0 / (1.0 - lam).sqrt());
                solve_lyapunov_discrete(&scaled, &identity).map_err(|e| match e {
                    LinalgError::NotSchurStable => CertifyError::Infeasible {
                        mode: mode.id,
                        lambda: lam,
                        eigenvalue: worst_modulus(&scaled),
                    },
                    other => CertifyError::Linalg(other),
                })?
            }
        };
        decay_margins.insert(mode.id, decay_margin(time_domain, a, &p, lam));
        class_k.insert(
            mode.id,
            ClassKBounds { k1: p.lambda_min(), k2: p.lambda_max() },
        );
        p_matrices.insert(mode.id, p);
    }

    let mut mu_table = BTreeMap::new();
    let mut jump_margins = BTreeMap::new();
    for pair in system.ordered_pairs() {
        let p_p = &p_matrices[&pair.to];
        let p_q = &p_matrices[&pair.from];
        // The theorems assume mu >= 1; flooring keeps ln(mu) >= 0 and is
        // conservative when the minimal scaling comes out below 1.
        let mu = min_scaling_mu(p_p, p_q)?.max(1.0);
        jump_margins.insert(pair, jump_margin(p_p, p_q, mu));
        mu_table.insert(pair, mu);
    }

    let thresholds =
        policy_for(scheme, time_domain, lambda, &mu_table)?.threshold_table()?;

    Ok(StabilityCertificate {
        scheme,
        time_domain,
        lambda: lambda.clone(),
        p_matrices,
        mu_table,
        thresholds,
        decay_margins,
        jump_margins,
        class_k,
        metadata: SolverMetadata { q_choice: "identity".into(), verification_tol: VERIFY_TOL },
    })
}

fn worst_real_part(a: &Matrix) -> f64 {
    eigenvalues(a)
        .map(|vals| vals.iter().fold(f64::NEG_INFINITY, |m, &(re, _)| m.max(re)))
        .unwrap_or(f64::NAN)
}

fn worst_modulus(a: &Matrix) -> f64 {
    eigenvalues(a)
        .map(|vals| vals.iter().fold(0.0_f64, |m, &(re, im)| m.max(re.hypot(im))))
        .unwrap_or(f64::NAN)
}

/// Most positive eigenvalue of the decay condition: AᵀP + PA + λP in
/// continuous time, AᵀPA − P + λP in discrete time.
fn decay_margin(time_domain: TimeDomain, a: &Matrix, p: &SymmetricMatrix, lambda: f64) -> f64 {
    let p_mat = p.as_matrix();
    let condition = match time_domain {
        TimeDomain::Continuous => a
            .transpose()
            .matmul(p_mat)
            .add(&p_mat.matmul(a))
            .add(&p_mat.scale(lambda)),
        TimeDomain::Discrete => a
            .transpose()
            .matmul(p_mat)
            .matmul(a)
            .sub(p_mat)
            .add(&p_mat.scale(lambda)),
    };
    let sym = SymmetricMatrix::new(condition).expect("decay condition is symmetric");
    sym.lambda_max()
}

/// Most positive eigenvalue of P_p − μ·P_q.
fn jump_margin(p_p: &SymmetricMatrix, p_q: &SymmetricMatrix, mu: f64) -> f64 {
    p_p.sub(&p_q.scale(mu)).lambda_max()
}

/// One re-checked certificate condition.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub condition: String,
    /// Most violated eigenvalue (≤ limit passes).
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MarginReport {
    pub pass: bool,
    pub tolerance: f64,
    pub conditions: Vec<ConditionReport>,
}

impl MarginReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.condition == name)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "certificate verification: {}\n",
            if self.pass { "pass" } else { "FAIL" }
        ));
        out.push_str(&format!("{:<24} {:>14} {:>14} {:>6}\n", "condition", "value", "limit", "ok"));
        for c in &self.conditions {
            out.push_str(&format!(
                "{:<24} {:>14.6e} {:>14.6e} {:>6}\n",
                c.condition,
                c.value,
                c.limit,
                if c.pass { "yes" } else { "NO" }
            ));
        }
        out
    }
}

/// Recomputes every certificate inequality from scratch: positive
/// definiteness and decay per mode, jump bound per pair, and the threshold
/// arithmetic. Eigenvalue limits are `tol` scaled by the magnitude of the
/// matrices entering each condition.
pub fn verify_certificate(
    system: &SwitchedSystem,
    certificate: &StabilityCertificate,
    tol: f64,
) -> Result<MarginReport> {
    if certificate.state_dim() != system.state_dim() {
        return Err(CertifyError::Mismatch(format!(
            "certificate is for state dimension {}, system has {}",
            certificate.state_dim(),
            system.state_dim()
        )));
    }
    if system.time_domain() != certificate.time_domain {
        return Err(CertifyError::Mismatch(format!(
            "certificate is {} time, system is {} time",
            certificate.time_domain,
            system.time_domain()
        )));
    }
    let mut conditions = Vec::new();

    for mode in system.modes() {
        let a = mode.a().ok_or(CertifyError::NonlinearMode(mode.id))?;
        let p = certificate
            .p_matrices
            .get(&mode.id)
            .ok_or_else(|| CertifyError::Mismatch(format!("no P matrix for mode {}", mode.id)))?;
        if p.order() != system.state_dim() {
            return Err(CertifyError::Mismatch(format!(
                "P for mode {} has order {}, expected {}",
                mode.id,
                p.order(),
                system.state_dim()
            )));
        }
        let lam = *certificate
            .lambda
            .get(&mode.id)
            .ok_or(CertifyError::MissingLambda(mode.id))?;
        let scale = p.as_matrix().norm_fro().max(1.0);

        let spectrum = sym_eig(p);
        conditions.push(ConditionReport {
            condition: format!("positive_definite[{}]", mode.id),
            value: -spectrum.eigenvalues[0],
            limit: -tol * scale,
            pass: -spectrum.eigenvalues[0] <= -tol * scale,
        });

        let decay = decay_margin(certificate.time_domain, a, p, lam);
        conditions.push(ConditionReport {
            condition: format!("decay[{}]", mode.id),
            value: decay,
            limit: tol * scale,
            pass: decay <= tol * scale,
        });
    }

    for (pair, &mu) in &certificate.mu_table {
        let p_p = certificate
            .p_matrices
            .get(&pair.to)
            .ok_or_else(|| CertifyError::Mismatch(format!("no P matrix for mode {}", pair.to)))?;
        let p_q = certificate
            .p_matrices
            .get(&pair.from)
            .ok_or_else(|| CertifyError::Mismatch(format!("no P matrix for mode {}", pair.from)))?;
        let scale = p_p.as_matrix().norm_fro().max(1.0);
        let margin = jump_margin(p_p, p_q, mu);
        conditions.push(ConditionReport {
            condition: format!("jump[{pair}]"),
            value: margin,
            limit: tol * scale,
            pass: margin <= tol * scale,
        });
        conditions.push(ConditionReport {
            condition: format!("mu_range[{pair}]"),
            value: 1.0 - mu,
            limit: 1e-9,
            pass: mu >= 1.0 - 1e-9,
        });
    }

    // Threshold arithmetic is recomputed from scratch. A certificate whose
    // stored gains are out of range cannot be recomputed; that is a finding,
    // not an input error.
    let recomputed = policy_for(
        certificate.scheme,
        certificate.time_domain,
        &certificate.lambda,
        &certificate.mu_table,
    )
    .and_then(|policy| Ok(policy.threshold_table()?));
    let worst_tau_gap = match recomputed {
        Ok(table) => {
            let mut worst = 0.0_f64;
            for (key, entry) in table.entries() {
                let gap = match certificate.thresholds.get(key) {
                    Some(have) => (have.tau - entry.tau).abs(),
                    None => f64::MAX,
                };
                worst = worst.max(gap);
            }
            worst
        }
        Err(_) => f64::MAX,
    };
    conditions.push(ConditionReport {
        condition: "thresholds_match".into(),
        value: worst_tau_gap,
        limit: 1e-12,
        pass: worst_tau_gap <= 1e-12,
    });

    Ok(MarginReport { pass: conditions.iter().all(|c| c.pass), tolerance: tol, conditions })
}

/// The piecewise-exponential bound on V_{σ(t)}(x(t)) along a signal: the
/// initial value decays at the active mode's rate through each segment and
/// is multiplied by μ_{p|q} at every switch.
///
/// Continuous time:
/// V₀ · Π_{switches ≤ t} μ_{σ(t_k)|σ(t_k⁻)} · exp(−Σ λ_mode · elapsed).
/// Discrete time replaces each exp factor with (1 − λ_mode)^steps.
pub fn envelope_bound(
    certificate: &StabilityCertificate,
    signal: &SwitchingSignal,
    v0: f64,
    t: f64,
) -> Result<f64> {
    if !(v0 > 0.0) || !v0.is_finite() {
        return Err(CertifyError::BadInitialValue(v0));
    }
    let horizon = signal.duration();
    if !(0.0..=horizon + 1e-9 * horizon.max(1.0)).contains(&t) {
        return Err(CertifyError::TimeOutOfRange(t, horizon));
    }

    let mut bound = v0;
    let mut start = 0.0;
    let segments = signal.segments();
    for (idx, seg) in segments.iter().enumerate() {
        if idx > 0 {
            // Segment entered at `start`; the jump applies as soon as t
            // reaches the switch instant (sigma is right-continuous).
            if start > t {
                break;
            }
            let pair = OrderedPair { to: seg.mode, from: segments[idx - 1].mode };
            let mu = certificate.mu(pair).ok_or(CertifyError::MissingMu(pair))?;
            bound *= mu;
        }
        let lam = *certificate
            .lambda
            .get(&seg.mode)
            .ok_or(CertifyError::MissingLambda(seg.mode))?;
        let elapsed = (t.min(start + seg.dwell) - start).max(0.0);
        bound *= match certificate.time_domain {
            TimeDomain::Continuous => (-lam * elapsed).exp(),
            TimeDomain::Discrete => (1.0 - lam).powf(elapsed),
        };
        start += seg.dwell;
        // Strict: at t exactly on the next switch instant, that switch's
        // jump factor still applies.
        if start > t {
            break;
        }
    }
    Ok(bound)
}
