//! Domain model: switched systems, modes, switching signals, and the JSON
//! system/signal documents.

use crate::linalg::Matrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("document is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("nonlinear modes cannot be serialized")]
    NonlinearNotSerializable,
}

impl ModelError {
    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError::Invalid { path: path.into(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Whether the dynamics evolve in continuous time (flows) or discrete time
/// (steps).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeDomain {
    Continuous,
    Discrete,
}

impl fmt::Display for TimeDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeDomain::Continuous => write!(f, "continuous"),
            TimeDomain::Discrete => write!(f, "discrete"),
        }
    }
}

/// Subsystem index, 1-based and contiguous within a system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeId(pub u32);

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for ModeId {
    fn from(v: u32) -> Self {
        ModeId(v)
    }
}

/// The switch event "p activated immediately after q", written p|q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrderedPair {
    /// Mode that becomes active (p).
    pub to: ModeId,
    /// Mode that was active just before (q).
    pub from: ModeId,
}

impl OrderedPair {
    pub fn new(to: ModeId, from: ModeId) -> Result<Self> {
        if to == from {
            return Err(ModelError::invalid(
                "pair",
                format!("ordered pair requires distinct modes, got {to}|{from}"),
            ));
        }
        Ok(OrderedPair { to, from })
    }

    /// Parses the "p|q" key syntax.
    pub fn parse_key(key: &str) -> Result<Self> {
        let (p, q) = key
            .split_once('|')
            .ok_or_else(|| ModelError::invalid("pair", format!("expected \"p|q\", got {key:?}")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| ModelError::invalid("pair", format!("bad mode id {s:?} in {key:?}")))
        };
        OrderedPair::new(ModeId(parse(p)?), ModeId(parse(q)?))
    }
}

impl fmt::Display for OrderedPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.to, self.from)
    }
}

/// State-update map for a nonlinear mode: returns ẋ in continuous time or
/// the next state in discrete time. Must be pure.
pub type VectorField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum Dynamics {
    Linear { a: Matrix, b: Option<Matrix> },
    Nonlinear(VectorField),
}

impl fmt::Debug for Dynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dynamics::Linear { a, b } => f
                .debug_struct("Linear")
                .field("a", a)
                .field("b", &b.as_ref().map(|m| (m.rows(), m.cols())))
                .finish(),
            Dynamics::Nonlinear(_) => write!(f, "Nonlinear(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mode {
    pub id: ModeId,
    pub dynamics: Dynamics,
}

impl Mode {
    pub fn linear(id: u32, a: Matrix, b: Option<Matrix>) -> Self {
        Mode { id: ModeId(id), dynamics: Dynamics::Linear { a, b } }
    }

    pub fn nonlinear(id: u32, f: VectorField) -> Self {
        Mode { id: ModeId(id), dynamics: Dynamics::Nonlinear(f) }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.dynamics, Dynamics::Linear { .. })
    }

    /// System matrix of a linear mode.
    pub fn a(&self) -> Option<&Matrix> {
        match &self.dynamics {
            Dynamics::Linear { a, .. } => Some(a),
            Dynamics::Nonlinear(_) => None,
        }
    }

    pub fn b(&self) -> Option<&Matrix> {
        match &self.dynamics {
            Dynamics::Linear { b, .. } => b.as_ref(),
            Dynamics::Nonlinear(_) => None,
        }
    }
}

/// A family of subsystems sharing one state space, switched by an external
/// signal.
#[derive(Debug, Clone)]
pub struct SwitchedSystem {
    time_domain: TimeDomain,
    state_dim: usize,
    input_dim: usize,
    modes: Vec<Mode>,
}

impl SwitchedSystem {
    /// Validates mode ids (contiguous 1..s, s ≥ 2) and matrix dimensions.
    pub fn new(
        time_domain: TimeDomain,
        state_dim: usize,
        input_dim: usize,
        modes: Vec<Mode>,
    ) -> Result<Self> {
        if state_dim == 0 {
            return Err(ModelError::invalid("state_dim", "must be positive"));
        }
        if modes.len() < 2 {
            return Err(ModelError::invalid("modes", "at least two modes are required"));
        }
        for (i, mode) in modes.iter().enumerate() {
            let path = format!("modes[{i}]");
            if mode.id.0 as usize != i + 1 {
                return Err(ModelError::invalid(
                    format!("{path}.id"),
                    format!("mode ids must be contiguous 1..{}, found {}", modes.len(), mode.id),
                ));
            }
            if let Dynamics::Linear { a, b } = &mode.dynamics {
                if a.rows() != state_dim || a.cols() != state_dim {
                    return Err(ModelError::invalid(
                        format!("{path}.A"),
                        format!("expected {state_dim}x{state_dim}, got {}x{}", a.rows(), a.cols()),
                    ));
                }
                match b {
                    Some(b) if b.rows() != state_dim || b.cols() != input_dim => {
                        return Err(ModelError::invalid(
                            format!("{path}.B"),
                            format!(
                                "expected {state_dim}x{input_dim}, got {}x{}",
                                b.rows(),
                                b.cols()
                            ),
                        ));
                    }
                    None if input_dim > 0 => {
                        return Err(ModelError::invalid(
                            format!("{path}.B"),
                            format!("input_dim is {input_dim} but mode has no B matrix"),
                        ));
                    }
                    _ => {}
                }
            }
        }
        Ok(SwitchedSystem { time_domain, state_dim, input_dim, modes })
    }

    pub fn time_domain(&self) -> TimeDomain {
        self.time_domain
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode_ids(&self) -> impl Iterator<Item = ModeId> + '_ {
        self.modes.iter().map(|m| m.id)
    }

    pub fn mode(&self, id: ModeId) -> Result<&Mode> {
        self.modes
            .get(id.0 as usize - 1)
            .ok_or_else(|| ModelError::invalid("mode", format!("unknown mode id {id}")))
    }

    pub fn all_linear(&self) -> bool {
        self.modes.iter().all(Mode::is_linear)
    }

    /// All ordered pairs p|q over the mode set, p ≠ q.
    pub fn ordered_pairs(&self) -> Vec<OrderedPair> {
        let mut out = Vec::new();
        for p in self.mode_ids() {
            for q in self.mode_ids() {
                if p != q {
                    out.push(OrderedPair { to: p, from: q });
                }
            }
        }
        out
    }

    /// Applies state feedback u = K_p·x mode-wise, producing the autonomous
    /// closed-loop system with A_p + B_p·K_p.
    pub fn close_loop(&self, gains: &BTreeMap<ModeId, Matrix>) -> Result<SwitchedSystem> {
        let mut modes = Vec::with_capacity(self.modes.len());
        for mode in &self.modes {
            let (a, b) = match &mode.dynamics {
                Dynamics::Linear { a, b: Some(b) } => (a, b),
                Dynamics::Linear { b: None, .. } => {
                    return Err(ModelError::invalid(
                        format!("modes[{}].B", mode.id.0 - 1),
                        "cannot close the loop on a mode without an input matrix",
                    ))
                }
                Dynamics::Nonlinear(_) => {
                    return Err(ModelError::invalid(
                        format!("modes[{}]", mode.id.0 - 1),
                        "cannot close the loop on a nonlinear mode",
                    ))
                }
            };
            let k = gains.get(&mode.id).ok_or_else(|| {
                ModelError::invalid("gains", format!("missing gain for mode {}", mode.id))
            })?;
            if k.rows() != self.input_dim || k.cols() != self.state_dim {
                return Err(ModelError::invalid(
                    "gains",
                    format!(
                        "gain for mode {} must be {}x{}, got {}x{}",
                        mode.id,
                        self.input_dim,
                        self.state_dim,
                        k.rows(),
                        k.cols()
                    ),
                ));
            }
            let closed = a.add(&b.matmul(k));
            modes.push(Mode::linear(mode.id.0, closed, None));
        }
        SwitchedSystem::new(self.time_domain, self.state_dim, 0, modes)
    }
}

/// One dwell segment: the active mode and how long it stays active.
///
/// Continuous dwell is in seconds; discrete dwell is a whole number of steps
/// stored as a real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub mode: ModeId,
    pub dwell: f64,
}

/// A switching signal σ: an initial mode and the ordered dwell segments,
/// with time origin t₀ = 0.
///
/// Durations are stored, never absolute times, so overlap or drift is
/// unrepresentable.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingSignal {
    segments: Vec<Segment>,
}

impl SwitchingSignal {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(ModelError::invalid("segments", "signal needs at least one segment"));
        }
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.dwell > 0.0) || !seg.dwell.is_finite() {
                return Err(ModelError::invalid(
                    format!("segments[{i}].dwell"),
                    format!("dwell must be positive and finite, got {}", seg.dwell),
                ));
            }
            if i > 0 && segments[i - 1].mode == seg.mode {
                return Err(ModelError::invalid(
                    format!("segments[{i}].mode"),
                    format!("consecutive segments must switch modes, {} repeats", seg.mode),
                ));
            }
        }
        Ok(SwitchingSignal { segments })
    }

    pub fn from_pairs(pairs: &[(u32, f64)]) -> Result<Self> {
        SwitchingSignal::new(
            pairs
                .iter()
                .map(|&(m, d)| Segment { mode: ModeId(m), dwell: d })
                .collect(),
        )
    }

    pub fn initial_mode(&self) -> ModeId {
        self.segments[0].mode
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Total signal duration (the horizon).
    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.dwell).sum()
    }

    /// Active mode at time `t` (σ is right-continuous: at a switch instant
    /// the new mode is already active).
    pub fn mode_at(&self, t: f64) -> Result<ModeId> {
        if t < 0.0 || t > self.duration() {
            return Err(ModelError::invalid(
                "t",
                format!("time {t} outside signal horizon [0, {}]", self.duration()),
            ));
        }
        let mut elapsed = 0.0;
        for seg in &self.segments {
            elapsed += seg.dwell;
            if t < elapsed {
                return Ok(seg.mode);
            }
        }
        Ok(self.segments.last().unwrap().mode)
    }

    /// Switch boundaries as (time, from_mode, to_mode), one per internal
    /// segment boundary, in increasing time order.
    pub fn switch_times(&self) -> Vec<(f64, ModeId, ModeId)> {
        let mut out = Vec::with_capacity(self.segments.len().saturating_sub(1));
        let mut t = 0.0;
        for window in self.segments.windows(2) {
            t += window[0].dwell;
            out.push((t, window[0].mode, window[1].mode));
        }
        out
    }

    /// Checks all dwells are whole step counts, as discrete time requires.
    pub fn validate_discrete(&self) -> Result<()> {
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.dwell.fract() != 0.0 {
                return Err(ModelError::invalid(
                    format!("segments[{i}].dwell"),
                    format!("discrete dwell must be a whole number of steps, got {}", seg.dwell),
                ));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// External document formats
// ---------------------------------------------------------------------------

/// Raw system-description document.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SystemDoc {
    time_domain: TimeDomain,
    state_dim: usize,
    input_dim: usize,
    modes: Vec<ModeDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    lambda: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    mu: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    chatter: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModeDoc {
    id: u32,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    b: Option<Vec<Vec<f64>>>,
}

/// Optional analysis parameters a system document may carry inline.
#[derive(Debug, Clone, Default)]
pub struct PolicyHints {
    pub lambda: BTreeMap<ModeId, f64>,
    pub mu: BTreeMap<String, f64>,
    pub chatter: BTreeMap<String, u64>,
}

/// Parses and validates a system document, returning the system plus any
/// inline policy hints.
pub fn parse_system_doc(document: &str) -> Result<(SwitchedSystem, PolicyHints)> {
    let doc: SystemDoc = serde_json::from_str(document)?;
    let mut modes = Vec::with_capacity(doc.modes.len());
    let mut seen = std::collections::BTreeSet::new();
    for (i, mode_doc) in doc.modes.iter().enumerate() {
        let path = format!("modes[{i}]");
        if !seen.insert(mode_doc.id) {
            return Err(ModelError::invalid(
                format!("{path}.id"),
                format!("duplicate mode id {}", mode_doc.id),
            ));
        }
        let a = Matrix::from_rows(&mode_doc.a)
            .map_err(|e| ModelError::invalid(format!("{path}.A"), e.to_string()))?;
        let b = match &mode_doc.b {
            None => None,
            Some(rows) => {
                let b = Matrix::from_rows(rows)
                    .map_err(|e| ModelError::invalid(format!("{path}.B"), e.to_string()))?;
                Some(orient_input_matrix(b, doc.state_dim, doc.input_dim, &path)?)
            }
        };
        modes.push(Mode::linear(mode_doc.id, a, b));
    }
    // Mode order in the document is not significant; ids are.
    modes.sort_by_key(|m| m.id);
    let system = SwitchedSystem::new(doc.time_domain, doc.state_dim, doc.input_dim, modes)?;

    let mut hints = PolicyHints {
        lambda: BTreeMap::new(),
        mu: doc.mu,
        chatter: doc.chatter,
    };
    for (key, value) in doc.lambda {
        let id: u32 = key.parse().map_err(|_| {
            ModelError::invalid("lambda", format!("lambda keys must be mode ids, got {key:?}"))
        })?;
        hints.lambda.insert(ModeId(id), value);
    }
    Ok((system, hints))
}

/// Parses a system document; see [`parse_system_doc`] for the variant that
/// also returns inline policy hints.
pub fn parse_system(document: &str) -> Result<SwitchedSystem> {
    parse_system_doc(document).map(|(system, _)| system)
}

/// Input matrices are columns (n×m). A paper-style row vector of length n
/// for a single-input system is accepted and transposed, since only the
/// column reading makes B·K conformable with m×n gains.
fn orient_input_matrix(b: Matrix, n: usize, m: usize, path: &str) -> Result<Matrix> {
    if b.rows() == n && b.cols() == m {
        Ok(b)
    } else if b.rows() == m && b.cols() == n && n != m {
        Ok(b.transpose())
    } else {
        Err(ModelError::invalid(
            format!("{path}.B"),
            format!("expected {n}x{m} (or its transpose), got {}x{}", b.rows(), b.cols()),
        ))
    }
}

/// Serializes a linear system back to the document format.
pub fn serialize_system(system: &SwitchedSystem) -> Result<String> {
    let mut modes = Vec::with_capacity(system.mode_count());
    for mode in system.modes() {
        match &mode.dynamics {
            Dynamics::Linear { a, b } => modes.push(ModeDoc {
                id: mode.id.0,
                a: a.to_rows(),
                b: b.as_ref().map(Matrix::to_rows),
            }),
            Dynamics::Nonlinear(_) => return Err(ModelError::NonlinearNotSerializable),
        }
    }
    let doc = SystemDoc {
        time_domain: system.time_domain(),
        state_dim: system.state_dim(),
        input_dim: system.input_dim(),
        modes,
        lambda: BTreeMap::new(),
        mu: BTreeMap::new(),
        chatter: BTreeMap::new(),
    };
    Ok(serde_json::to_string_pretty(&doc).unwrap())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SignalDoc {
    initial_mode: u32,
    segments: Vec<(u32, f64)>,
}

/// Parses a switching-signal document.
pub fn parse_signal(document: &str) -> Result<SwitchingSignal> {
    let doc: SignalDoc = serde_json::from_str(document)?;
    let signal = SwitchingSignal::from_pairs(&doc.segments)?;
    if signal.initial_mode().0 != doc.initial_mode {
        return Err(ModelError::invalid(
            "initial_mode",
            format!(
                "initial_mode is {} but the first segment has mode {}",
                doc.initial_mode,
                signal.initial_mode()
            ),
        ));
    }
    Ok(signal)
}

pub fn serialize_signal(signal: &SwitchingSignal) -> String {
    let doc = SignalDoc {
        initial_mode: signal.initial_mode().0,
        segments: signal.segments().iter().map(|s| (s.mode.0, s.dwell)).collect(),
    };
    serde_json::to_string_pretty(&doc).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn demo_doc() -> String {
        r#"{
            "time_domain": "continuous",
            "state_dim": 2,
            "input_dim": 1,
            "modes": [
                {"id": 1, "A": [[100.3, -20.1], [-10.1, -10.2]], "B": [[-0.5, -0.8]]},
                {"id": 2, "A": [[10.8, -10.2], [2.0, 10.5]], "B": [[-10.1], [10.0]]},
                {"id": 3, "A": [[0.2, -3.59], [12.0, 10.4]], "B": [[5.1], [-10.1]]}
            ]
        }"#
        .to_string()
    }

    #[test]
    fn parses_three_mode_document() {
        let system = parse_system(&demo_doc()).unwrap();
        assert_eq!(system.mode_count(), 3);
        assert_eq!(system.state_dim(), 2);
        let a1 = system.mode(ModeId(1)).unwrap().a().unwrap();
        assert_eq!(a1.to_rows(), vec![vec![100.3, -20.1], vec![-10.1, -10.2]]);
    }

    #[test]
    fn row_vector_input_is_transposed_to_column() {
        let system = parse_system(&demo_doc()).unwrap();
        let b1 = system.mode(ModeId(1)).unwrap().b().unwrap();
        assert_eq!((b1.rows(), b1.cols()), (2, 1));
        assert_eq!(b1.to_rows(), vec![vec![-0.5], vec![-0.8]]);
    }

    #[test]
    fn rejects_single_mode() {
        let doc = r#"{
            "time_domain": "continuous", "state_dim": 1, "input_dim": 0,
            "modes": [{"id": 1, "A": [[-1.0]]}]
        }"#;
        let err = parse_system(doc).unwrap_err();
        assert!(err.to_string().contains("at least two modes"), "{err}");
    }

    #[test]
    fn rejects_duplicate_mode_ids() {
        let doc = r#"{
            "time_domain": "continuous", "state_dim": 1, "input_dim": 0,
            "modes": [{"id": 1, "A": [[-1.0]]}, {"id": 1, "A": [[-2.0]]}]
        }"#;
        let err = parse_system(doc).unwrap_err();
        assert!(err.to_string().contains("duplicate mode id"), "{err}");
    }

    #[test]
    fn rejects_dimension_mismatch_with_path() {
        let doc = r#"{
            "time_domain": "continuous", "state_dim": 2, "input_dim": 1,
            "modes": [
                {"id": 1, "A": [[1.0, 0.0], [0.0, 1.0]], "B": [[1.0], [1.0]]},
                {"id": 2, "A": [[1.0, 0.0]], "B": [[1.0], [1.0]]}
            ]
        }"#;
        let err = parse_system(doc).unwrap_err();
        assert!(err.to_string().contains("modes[1].A"), "{err}");
    }

    #[test]
    fn system_round_trips_through_serialization() {
        let system = parse_system(&demo_doc()).unwrap();
        let round = parse_system(&serialize_system(&system).unwrap()).unwrap();
        assert_eq!(round.mode_count(), system.mode_count());
        for (a, b) in system.modes().iter().zip(round.modes()) {
            assert_eq!(a.a().unwrap(), b.a().unwrap());
            assert_eq!(a.b(), b.b());
        }
    }

    #[test]
    fn single_segment_has_no_switches() {
        let signal = SwitchingSignal::from_pairs(&[(1, 2.0)]).unwrap();
        assert!(signal.switch_times().is_empty());
    }

    #[test]
    fn switch_times_are_cumulative() {
        let signal = SwitchingSignal::from_pairs(&[(1, 1.0), (2, 0.5), (1, 2.0)]).unwrap();
        let switches = signal.switch_times();
        assert_eq!(switches.len(), 2);
        assert_abs_diff_eq!(switches[0].0, 1.0);
        assert_eq!((switches[0].1, switches[0].2), (ModeId(1), ModeId(2)));
        assert_abs_diff_eq!(switches[1].0, 1.5);
        assert_eq!((switches[1].1, switches[1].2), (ModeId(2), ModeId(1)));
    }

    #[test]
    fn demo_style_signal_boundaries() {
        let signal =
            SwitchingSignal::from_pairs(&[(2, 0.6), (1, 1.0), (3, 1.6), (1, 0.9)]).unwrap();
        let switches = signal.switch_times();
        let times: Vec<f64> = switches.iter().map(|s| s.0).collect();
        assert_abs_diff_eq!(times[0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(times[1], 1.6, epsilon = 1e-12);
        assert_abs_diff_eq!(times[2], 3.2, epsilon = 1e-12);
        let pairs: Vec<String> = switches
            .iter()
            .map(|&(_, from, to)| OrderedPair::new(to, from).unwrap().to_string())
            .collect();
        assert_eq!(pairs, vec!["1|2", "3|1", "1|3"]);
    }

    #[test]
    fn rejects_repeated_consecutive_mode() {
        assert!(SwitchingSignal::from_pairs(&[(1, 1.0), (1, 1.0)]).is_err());
    }

    #[test]
    fn rejects_nonpositive_dwell() {
        assert!(SwitchingSignal::from_pairs(&[(1, 0.0)]).is_err());
        assert!(SwitchingSignal::from_pairs(&[(1, -1.0)]).is_err());
    }

    #[test]
    fn signal_document_round_trip() {
        let signal = SwitchingSignal::from_pairs(&[(2, 0.6), (1, 1.0)]).unwrap();
        let parsed = parse_signal(&serialize_signal(&signal)).unwrap();
        assert_eq!(parsed, signal);
    }

    #[test]
    fn signal_document_checks_initial_mode() {
        let doc = r#"{"initial_mode": 1, "segments": [[2, 1.0], [1, 1.0]]}"#;
        assert!(parse_signal(doc).is_err());
    }

    #[test]
    fn mode_at_is_right_continuous() {
        let signal = SwitchingSignal::from_pairs(&[(1, 1.0), (2, 1.0)]).unwrap();
        assert_eq!(signal.mode_at(0.0).unwrap(), ModeId(1));
        assert_eq!(signal.mode_at(1.0).unwrap(), ModeId(2));
        assert_eq!(signal.mode_at(2.0).unwrap(), ModeId(2));
        assert!(signal.mode_at(2.1).is_err());
    }

    #[test]
    fn pair_key_parsing() {
        let pair = OrderedPair::parse_key("3|1").unwrap();
        assert_eq!((pair.to, pair.from), (ModeId(3), ModeId(1)));
        assert!(OrderedPair::parse_key("3|3").is_err());
        assert!(OrderedPair::parse_key("3").is_err());
    }

    #[test]
    fn close_loop_applies_gains() {
        let system = parse_system(&demo_doc()).unwrap();
        let mut gains = BTreeMap::new();
        for id in system.mode_ids() {
            gains.insert(id, Matrix::zeros(1, 2));
        }
        let closed = system.close_loop(&gains).unwrap();
        assert_eq!(closed.input_dim(), 0);
        assert_eq!(
            closed.mode(ModeId(2)).unwrap().a().unwrap(),
            system.mode(ModeId(2)).unwrap().a().unwrap()
        );
    }
}
