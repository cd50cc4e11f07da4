//! Bundled three-mode demonstration system.
//!
//! A continuous-time switched linear system with three unstable second-order
//! modes and one input each, together with a reference parameter set: decay
//! rates, sequence-based and mode-dependent jump gains, and two published
//! stabilizing gain sets. The CLI `report` command and much of the test
//! suite run against this system.

use crate::dwell::{DwellPolicy, MuSpec, Scheme};
use crate::linalg::Matrix;
use crate::model::{Mode, ModeId, OrderedPair, SwitchedSystem, TimeDomain};
use std::collections::BTreeMap;

/// The three-mode system. Input matrices are columns (2×1).
pub fn system() -> SwitchedSystem {
    let a1 = Matrix::from_rows(&[vec![100.3, -20.1], vec![-10.1, -10.2]]).unwrap();
    let b1 = Matrix::from_rows(&[vec![-0.5], vec![-0.8]]).unwrap();
    let a2 = Matrix::from_rows(&[vec![10.8, -10.2], vec![2.0, 10.5]]).unwrap();
    let b2 = Matrix::from_rows(&[vec![-10.1], vec![10.0]]).unwrap();
    let a3 = Matrix::from_rows(&[vec![0.2, -3.59], vec![12.0, 10.4]]).unwrap();
    let b3 = Matrix::from_rows(&[vec![5.1], vec![-10.1]]).unwrap();
    SwitchedSystem::new(
        TimeDomain::Continuous,
        2,
        1,
        vec![
            Mode::linear(1, a1, Some(b1)),
            Mode::linear(2, a2, Some(b2)),
            Mode::linear(3, a3, Some(b3)),
        ],
    )
    .unwrap()
}

/// Decay rates λ = (3, 1.5, 2.5).
pub fn lambda() -> BTreeMap<ModeId, f64> {
    [(ModeId(1), 3.0), (ModeId(2), 1.5), (ModeId(3), 2.5)].into()
}

/// Sequence-based jump gains. μ_{2|3} is exactly 1: that switch direction
/// carries no Lyapunov growth and its dwell threshold is 0.
pub fn mu_pairs() -> BTreeMap<OrderedPair, f64> {
    let pair = |to, from| OrderedPair { to: ModeId(to), from: ModeId(from) };
    [
        (pair(1, 2), 18.0),
        (pair(2, 1), 2.3),
        (pair(3, 1), 41.0),
        (pair(1, 3), 13.0),
        (pair(2, 3), 1.0),
        (pair(3, 2), 17.0),
    ]
    .into()
}

/// Mode-dependent jump gains μ = (18, 2.3, 41).
pub fn mu_modes() -> BTreeMap<ModeId, f64> {
    [(ModeId(1), 18.0), (ModeId(2), 2.3), (ModeId(3), 41.0)].into()
}

/// Reference gains for the mode-dependent scheme.
pub fn gains_mode_dependent() -> BTreeMap<ModeId, Matrix> {
    [
        (ModeId(1), Matrix::from_rows(&[vec![403.6393, -107.2597]]).unwrap()),
        (ModeId(2), Matrix::from_rows(&[vec![2.8646, -0.6579]]).unwrap()),
        (ModeId(3), Matrix::from_rows(&[vec![-9.4055, -2.6831]]).unwrap()),
    ]
    .into()
}

/// Reference gains for the sequence-based scheme.
pub fn gains_sequence_based() -> BTreeMap<ModeId, Matrix> {
    [
        (ModeId(1), Matrix::from_rows(&[vec![371.7662, -100.0154]]).unwrap()),
        (ModeId(2), Matrix::from_rows(&[vec![2.8330, -0.4917]]).unwrap()),
        (ModeId(3), Matrix::from_rows(&[vec![-7.9922, -2.0744]]).unwrap()),
    ]
    .into()
}

pub fn policy(scheme: Scheme) -> DwellPolicy {
    let mu = match scheme {
        Scheme::Sbasdt | Scheme::Sbapdt => MuSpec::PerPair(mu_pairs()),
        Scheme::Mdadt | Scheme::Adt => MuSpec::PerMode(mu_modes()),
    };
    DwellPolicy::new(scheme, TimeDomain::Continuous, lambda(), mu).unwrap()
}

/// The system document with the reference λ and μ inline.
pub fn system_document() -> String {
    serde_json::json!({
        "time_domain": "continuous",
        "state_dim": 2,
        "input_dim": 1,
        "modes": [
            {"id": 1, "A": [[100.3, -20.1], [-10.1, -10.2]], "B": [[-0.5], [-0.8]]},
            {"id": 2, "A": [[10.8, -10.2], [2.0, 10.5]], "B": [[-10.1], [10.0]]},
            {"id": 3, "A": [[0.2, -3.59], [12.0, 10.4]], "B": [[5.1], [-10.1]]}
        ],
        "lambda": {"1": 3.0, "2": 1.5, "3": 2.5},
        "mu": {"1|2": 18.0, "2|1": 2.3, "3|1": 41.0, "1|3": 13.0, "2|3": 1.0, "3|2": 17.0}
    })
    .to_string()
}
