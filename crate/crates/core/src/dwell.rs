//! Dwell-time accounting and admissibility.
//!
//! Four switching schemes are supported, each constraining a different
//! counter of the signal:
//!
//! * ADT — total switches against total elapsed time, one global budget;
//! * MDADT — per-mode activations against that mode's running time;
//! * SBASDT — per ordered pair p|q (p activated immediately after q),
//!   against the running time of the *successor* p spent in segments entered
//!   through that pair;
//! * SBAPDT — per ordered pair, against the running time of the
//!   *predecessor* q in the segments that ended with that pair's switch.
//!
//! A signal is admissible for a key when N ≤ N₀ + T/τ holds over every
//! interval, where N counts events, T accrues the scheme's running time, N₀
//! is the chatter bound, and τ the dwell-time threshold.
//!
//! Counting conventions: an event is counted when its switch instant lies in
//! the half-open interval [t1, t2); running time accrues over segment
//! overlaps with [t1, t2) regardless of where the switch instant fell, which
//! makes every counter additive under interval splits. The first segment of
//! a signal has no predecessor and contributes to per-mode running time
//! only; its activation at t = 0 is counted in the per-mode activation
//! counter but in no pair counter.

use crate::model::{ModelError, ModeId, OrderedPair, SwitchingSignal, TimeDomain};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DwellError {
    #[error("interval [{0}, {1}) is outside the signal horizon [0, {2}]")]
    IntervalOutOfRange(f64, f64, f64),
    #[error("decay rate for mode {0} is missing (required by key {1})")]
    MissingLambda(ModeId, String),
    #[error("jump gain {0} for key {1} is out of range: must be >= 1")]
    MuOutOfRange(f64, String),
    #[error(
        "decay rate {0} is out of range: continuous time requires lambda > 0, \
         discrete time requires 0 < lambda < 1"
    )]
    LambdaOutOfRange(f64),
    #[error("policy has no usable keys for scheme {0}")]
    EmptyPolicy(Scheme),
    #[error("mu table mixes mode keys and pair keys")]
    MixedMuKeys,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("policy document is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, DwellError>;

/// Switching scheme under which admissibility is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Adt,
    Mdadt,
    Sbasdt,
    Sbapdt,
}

impl Scheme {
    pub fn is_sequence_based(self) -> bool {
        matches!(self, Scheme::Sbasdt | Scheme::Sbapdt)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Scheme::Adt => "adt",
            Scheme::Mdadt => "mdadt",
            Scheme::Sbasdt => "sbasdt",
            Scheme::Sbapdt => "sbapdt",
        };
        write!(f, "{name}")
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "adt" => Ok(Scheme::Adt),
            "mdadt" => Ok(Scheme::Mdadt),
            "sbasdt" => Ok(Scheme::Sbasdt),
            "sbapdt" => Ok(Scheme::Sbapdt),
            other => Err(format!("unknown scheme {other:?}")),
        }
    }
}

/// One budget key of a policy: the whole signal (ADT), a mode (MDADT), or an
/// ordered switch pair (SBASDT/SBAPDT).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PolicyKey {
    Global,
    Mode(ModeId),
    Pair(OrderedPair),
}

impl fmt::Display for PolicyKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKey::Global => write!(f, "*"),
            PolicyKey::Mode(p) => write!(f, "{p}"),
            PolicyKey::Pair(pair) => write!(f, "{pair}"),
        }
    }
}

impl PolicyKey {
    pub fn parse(key: &str) -> Result<Self> {
        let key = key.trim();
        if key == "*" {
            Ok(PolicyKey::Global)
        } else if key.contains('|') {
            Ok(PolicyKey::Pair(OrderedPair::parse_key(key)?))
        } else {
            let id: u32 = key.parse().map_err(|_| {
                DwellError::Model(ModelError::invalid(
                    "key",
                    format!("expected \"*\", a mode id, or \"p|q\", got {key:?}"),
                ))
            })?;
            Ok(PolicyKey::Mode(ModeId(id)))
        }
    }
}

// ---------------------------------------------------------------------------
// Counting statistics
// ---------------------------------------------------------------------------

/// All counters of a switching signal over one interval [t1, t2).
#[derive(Debug, Clone, Default)]
pub struct DwellStatistics {
    pub interval: (f64, f64),
    /// Total switch instants in the interval.
    pub switch_count: u64,
    /// N_p: activations of each mode, including the initial activation at
    /// t = 0 when the interval starts there.
    pub activations: BTreeMap<ModeId, u64>,
    /// T_p: running time of each mode.
    pub running_time: BTreeMap<ModeId, f64>,
    /// N_{p|q}: switches into p directly from q.
    pub pair_count: BTreeMap<OrderedPair, u64>,
    /// Successor-side running time of p over segments entered via p|q.
    pub successor_time: BTreeMap<OrderedPair, f64>,
    /// Predecessor-side running time of q over segments that exited via p|q.
    pub predecessor_time: BTreeMap<OrderedPair, f64>,
    /// Every pair with any nonzero counter in the interval.
    pub observed_pairs: BTreeSet<OrderedPair>,
}

/// Counts every dwell statistic of `signal` over [t1, t2).
pub fn compute_statistics(signal: &SwitchingSignal, t1: f64, t2: f64) -> Result<DwellStatistics> {
    let horizon = signal.duration();
    if !(t1 >= 0.0 && t1 < t2 && t2 <= horizon + 1e-9 * horizon.max(1.0)) {
        return Err(DwellError::IntervalOutOfRange(t1, t2, horizon));
    }

    let segments = signal.segments();
    let mut stats = DwellStatistics { interval: (t1, t2), ..Default::default() };
    let mut start = 0.0;
    for (idx, seg) in segments.iter().enumerate() {
        let end = start + seg.dwell;
        let overlap = (end.min(t2) - start.max(t1)).max(0.0);
        if overlap > 0.0 {
            *stats.running_time.entry(seg.mode).or_default() += overlap;
        }
        if idx == 0 {
            if t1 == 0.0 {
                *stats.activations.entry(seg.mode).or_default() += 1;
            }
        } else {
            let pair = OrderedPair { to: seg.mode, from: segments[idx - 1].mode };
            if start >= t1 && start < t2 {
                stats.switch_count += 1;
                *stats.activations.entry(seg.mode).or_default() += 1;
                *stats.pair_count.entry(pair).or_default() += 1;
            }
            if overlap > 0.0 {
                *stats.successor_time.entry(pair).or_default() += overlap;
            }
        }
        if idx + 1 < segments.len() {
            let exit_pair = OrderedPair { to: segments[idx + 1].mode, from: seg.mode };
            if overlap > 0.0 {
                *stats.predecessor_time.entry(exit_pair).or_default() += overlap;
            }
        }
        start = end;
        if start >= t2 && idx > 0 {
            // Later segments cannot intersect the interval or host a
            // counted switch instant.
            break;
        }
    }

    for key in stats.pair_count.keys() {
        stats.observed_pairs.insert(*key);
    }
    for key in stats.successor_time.keys() {
        stats.observed_pairs.insert(*key);
    }
    for key in stats.predecessor_time.keys() {
        stats.observed_pairs.insert(*key);
    }
    Ok(stats)
}

// ---------------------------------------------------------------------------
// Thresholds
// ---------------------------------------------------------------------------

/// Minimal average dwell time for a jump gain `mu` and decay rate `lambda`.
///
/// Continuous time: ln μ / λ. Discrete time: −ln μ / ln(1 − λ), a step
/// count. μ = 1 yields 0 (that switch costs nothing). The scheme determines
/// only which side's decay rate the caller must pass: the mode's own
/// (ADT/MDADT), the successor's (SBASDT), or the predecessor's (SBAPDT).
pub fn threshold(scheme: Scheme, time_domain: TimeDomain, mu: f64, lambda: f64) -> Result<f64> {
    let _ = scheme;
    if !(mu >= 1.0) || !mu.is_finite() {
        return Err(DwellError::MuOutOfRange(mu, "<direct>".into()));
    }
    validate_lambda(time_domain, lambda)?;
    if mu == 1.0 {
        return Ok(0.0);
    }
    Ok(match time_domain {
        TimeDomain::Continuous => mu.ln() / lambda,
        TimeDomain::Discrete => -mu.ln() / (1.0 - lambda).ln(),
    })
}

fn validate_lambda(time_domain: TimeDomain, lambda: f64) -> Result<()> {
    let ok = match time_domain {
        TimeDomain::Continuous => lambda > 0.0 && lambda.is_finite(),
        TimeDomain::Discrete => lambda > 0.0 && lambda < 1.0,
    };
    if ok {
        Ok(())
    } else {
        Err(DwellError::LambdaOutOfRange(lambda))
    }
}

/// One row of a threshold table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThresholdEntry {
    pub mu: f64,
    pub lambda: f64,
    pub tau: f64,
}

/// Dwell-time thresholds per policy key.
#[derive(Debug, Clone)]
pub struct ThresholdTable {
    pub scheme: Scheme,
    pub time_domain: TimeDomain,
    entries: BTreeMap<PolicyKey, ThresholdEntry>,
}

impl ThresholdTable {
    pub fn entries(&self) -> impl Iterator<Item = (&PolicyKey, &ThresholdEntry)> {
        self.entries.iter()
    }

    pub fn get(&self, key: &PolicyKey) -> Option<&ThresholdEntry> {
        self.entries.get(key)
    }

    pub fn tau(&self, key: &PolicyKey) -> Option<f64> {
        self.entries.get(key).map(|e| e.tau)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Aligned text rendering with full-precision and rounded columns.
    pub fn render(&self, digits: u32) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:<8} {:>10} {:>8} {:>12} {:>10} {:>8}\n",
            "scheme", "key", "mu", "lambda", "tau", "tau_round", "tau_1dp"
        ));
        for (key, e) in &self.entries {
            out.push_str(&format!(
                "{:<10} {:<8} {:>10} {:>8} {:>12.6} {:>10} {:>8}\n",
                self.scheme.to_string(),
                key.to_string(),
                e.mu,
                e.lambda,
                e.tau,
                format_rounded(e.tau, digits),
                format_rounded(e.tau, 1),
            ));
        }
        out
    }
}

impl Serialize for ThresholdTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Row<'a> {
            key: String,
            #[serde(flatten)]
            entry: &'a ThresholdEntry,
        }
        #[derive(Serialize)]
        struct Table<'a> {
            scheme: Scheme,
            time_domain: TimeDomain,
            entries: Vec<Row<'a>>,
        }
        Table {
            scheme: self.scheme,
            time_domain: self.time_domain,
            entries: self
                .entries
                .iter()
                .map(|(k, e)| Row { key: k.to_string(), entry: e })
                .collect(),
        }
        .serialize(s)
    }
}

/// Rounds half away from zero at `digits` decimals.
pub fn round_half_away(x: f64, digits: u32) -> f64 {
    let scale = 10f64.powi(digits as i32);
    (x * scale).round() / scale
}

/// Formats `x` rounded half away from zero at `digits` decimals.
pub fn format_rounded(x: f64, digits: u32) -> String {
    format!("{:.*}", digits as usize, round_half_away(x, digits))
}

// ---------------------------------------------------------------------------
// Policy
// ---------------------------------------------------------------------------

/// Jump gains, keyed per the scheme's granularity.
#[derive(Debug, Clone, PartialEq)]
pub enum MuSpec {
    Global(f64),
    PerMode(BTreeMap<ModeId, f64>),
    PerPair(BTreeMap<OrderedPair, f64>),
}

/// Scheme, decay rates, jump gains, and chatter bounds; thresholds are
/// always derived from these, never stored independently.
#[derive(Debug, Clone)]
pub struct DwellPolicy {
    pub scheme: Scheme,
    pub time_domain: TimeDomain,
    pub lambda: BTreeMap<ModeId, f64>,
    pub mu: MuSpec,
    chatter: BTreeMap<PolicyKey, u64>,
}

/// Chatter bound applied when a key has none configured.
pub const DEFAULT_CHATTER: u64 = 1;

impl DwellPolicy {
    pub fn new(
        scheme: Scheme,
        time_domain: TimeDomain,
        lambda: BTreeMap<ModeId, f64>,
        mu: MuSpec,
    ) -> Result<Self> {
        let policy = DwellPolicy { scheme, time_domain, lambda, mu, chatter: BTreeMap::new() };
        policy.validate()?;
        Ok(policy)
    }

    pub fn with_chatter(mut self, chatter: BTreeMap<PolicyKey, u64>) -> Self {
        self.chatter = chatter;
        self
    }

    fn validate(&self) -> Result<()> {
        for &lambda in self.lambda.values() {
            validate_lambda(self.time_domain, lambda)?;
        }
        let check_mu = |mu: f64, key: String| {
            if mu >= 1.0 && mu.is_finite() {
                Ok(())
            } else {
                Err(DwellError::MuOutOfRange(mu, key))
            }
        };
        match &self.mu {
            MuSpec::Global(v) => check_mu(*v, "*".into())?,
            MuSpec::PerMode(map) => {
                for (mode, &v) in map {
                    check_mu(v, mode.to_string())?;
                }
            }
            MuSpec::PerPair(map) => {
                for (pair, &v) in map {
                    check_mu(v, pair.to_string())?;
                }
            }
        }
        Ok(())
    }

    pub fn chatter_bound(&self, key: &PolicyKey) -> u64 {
        self.chatter.get(key).copied().unwrap_or(DEFAULT_CHATTER)
    }

    /// Jump gains keyed per ordered pair, broadcasting mode-keyed or global
    /// gains when the scheme is sequence based (μ_{p|q} := μ_p).
    fn pair_mu(&self) -> Result<BTreeMap<OrderedPair, f64>> {
        let modes: BTreeSet<ModeId> = self.lambda.keys().copied().collect();
        let mut out = BTreeMap::new();
        match &self.mu {
            MuSpec::PerPair(map) => out = map.clone(),
            MuSpec::PerMode(map) => {
                for (&p, &mu) in map {
                    for &q in &modes {
                        if q != p {
                            out.insert(OrderedPair { to: p, from: q }, mu);
                        }
                    }
                }
            }
            MuSpec::Global(mu) => {
                for &p in &modes {
                    for &q in &modes {
                        if q != p {
                            out.insert(OrderedPair { to: p, from: q }, *mu);
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(DwellError::EmptyPolicy(self.scheme));
        }
        Ok(out)
    }

    /// Jump gains keyed per mode; pair-keyed gains collapse conservatively
    /// to μ_p = max_q μ_{p|q}.
    fn mode_mu(&self) -> Result<BTreeMap<ModeId, f64>> {
        let mut out = BTreeMap::new();
        match &self.mu {
            MuSpec::PerMode(map) => out = map.clone(),
            MuSpec::PerPair(map) => {
                for (pair, &mu) in map {
                    let entry = out.entry(pair.to).or_insert(mu);
                    *entry = entry.max(mu);
                }
            }
            MuSpec::Global(mu) => {
                for &p in self.lambda.keys() {
                    out.insert(p, *mu);
                }
            }
        }
        if out.is_empty() {
            return Err(DwellError::EmptyPolicy(self.scheme));
        }
        Ok(out)
    }

    /// Applies the threshold formula to every key of the scheme. SBASDT
    /// resolves the successor's decay rate λ_p for key p|q; SBAPDT the
    /// predecessor's λ_q.
    pub fn threshold_table(&self) -> Result<ThresholdTable> {
        let mut entries = BTreeMap::new();
        match self.scheme {
            Scheme::Adt => {
                let mu = match &self.mu {
                    MuSpec::Global(v) => *v,
                    MuSpec::PerMode(map) => map.values().copied().fold(1.0, f64::max),
                    MuSpec::PerPair(map) => map.values().copied().fold(1.0, f64::max),
                };
                let lambda = self
                    .lambda
                    .values()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                if !lambda.is_finite() {
                    return Err(DwellError::EmptyPolicy(self.scheme));
                }
                let tau = threshold(self.scheme, self.time_domain, mu, lambda)?;
                entries.insert(PolicyKey::Global, ThresholdEntry { mu, lambda, tau });
            }
            Scheme::Mdadt => {
                for (&mode, &mu) in &self.mode_mu()? {
                    let lambda = *self.lambda.get(&mode).ok_or_else(|| {
                        DwellError::MissingLambda(mode, PolicyKey::Mode(mode).to_string())
                    })?;
                    let tau = threshold(self.scheme, self.time_domain, mu, lambda)?;
                    entries.insert(PolicyKey::Mode(mode), ThresholdEntry { mu, lambda, tau });
                }
            }
            Scheme::Sbasdt | Scheme::Sbapdt => {
                for (&pair, &mu) in &self.pair_mu()? {
                    let rate_mode = match self.scheme {
                        Scheme::Sbasdt => pair.to,
                        _ => pair.from,
                    };
                    let lambda = *self.lambda.get(&rate_mode).ok_or_else(|| {
                        DwellError::MissingLambda(rate_mode, PolicyKey::Pair(pair).to_string())
                    })?;
                    let tau = threshold(self.scheme, self.time_domain, mu, lambda)?;
                    entries.insert(PolicyKey::Pair(pair), ThresholdEntry { mu, lambda, tau });
                }
            }
        }
        Ok(ThresholdTable { scheme: self.scheme, time_domain: self.time_domain, entries })
    }

    /// Parses the policy document format.
    pub fn from_json(document: &str) -> Result<Self> {
        let doc: PolicyDoc = serde_json::from_str(document)?;
        DwellPolicy::from_doc(doc)
    }

    fn from_doc(doc: PolicyDoc) -> Result<Self> {
        let mut lambda = BTreeMap::new();
        for (key, value) in doc.lambda {
            let id: u32 = key.parse().map_err(|_| {
                DwellError::Model(ModelError::invalid(
                    "lambda",
                    format!("lambda keys must be mode ids, got {key:?}"),
                ))
            })?;
            lambda.insert(ModeId(id), value);
        }
        let mu = match doc.mu {
            MuDoc::Number(v) => MuSpec::Global(v),
            MuDoc::Map(map) => {
                let pairish = map.keys().filter(|k| k.contains('|')).count();
                if pairish == map.len() {
                    let mut pairs = BTreeMap::new();
                    for (key, value) in map {
                        pairs.insert(OrderedPair::parse_key(&key)?, value);
                    }
                    MuSpec::PerPair(pairs)
                } else if pairish == 0 {
                    let mut modes = BTreeMap::new();
                    for (key, value) in map {
                        let id: u32 = key.parse().map_err(|_| {
                            DwellError::Model(ModelError::invalid(
                                "mu",
                                format!("mu keys must be mode ids or \"p|q\", got {key:?}"),
                            ))
                        })?;
                        modes.insert(ModeId(id), value);
                    }
                    MuSpec::PerMode(modes)
                } else {
                    return Err(DwellError::MixedMuKeys);
                }
            }
        };
        let mut chatter = BTreeMap::new();
        for (key, value) in doc.chatter {
            chatter.insert(PolicyKey::parse(&key)?, value);
        }
        let time_domain = doc.time_domain.unwrap_or(TimeDomain::Continuous);
        Ok(DwellPolicy::new(doc.scheme, time_domain, lambda, mu)?.with_chatter(chatter))
    }

    pub fn to_json(&self) -> String {
        let mu = match &self.mu {
            MuSpec::Global(v) => MuDoc::Number(*v),
            MuSpec::PerMode(map) => {
                MuDoc::Map(map.iter().map(|(k, v)| (k.to_string(), *v)).collect())
            }
            MuSpec::PerPair(map) => {
                MuDoc::Map(map.iter().map(|(k, v)| (k.to_string(), *v)).collect())
            }
        };
        let doc = PolicyDoc {
            scheme: self.scheme,
            time_domain: Some(self.time_domain),
            lambda: self.lambda.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            mu,
            chatter: self.chatter.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        };
        serde_json::to_string_pretty(&doc).unwrap()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PolicyDoc {
    scheme: Scheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    time_domain: Option<TimeDomain>,
    lambda: BTreeMap<String, f64>,
    mu: MuDoc,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    chatter: BTreeMap<String, u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum MuDoc {
    Number(f64),
    Map(BTreeMap<String, f64>),
}

// ---------------------------------------------------------------------------
// Admissibility
// ---------------------------------------------------------------------------

/// Slack above which a key is reported violated. Covers float noise when a
/// dwell equals its threshold exactly.
pub const ADMISSIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct KeyVerdict {
    pub key: String,
    pub tau: f64,
    pub chatter_bound: u64,
    /// False when τ = 0 (μ = 1): the key constrains nothing.
    pub constrained: bool,
    /// Worst value of N − N₀ − T/τ over all checked intervals.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_interval: Option<(f64, f64)>,
    /// The worst interval's right endpoint sits on a switch instant that is
    /// counted with no accrued running time (the supremum case).
    pub worst_includes_end_switch: bool,
    pub admissible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub scheme: Scheme,
    pub admissible: bool,
    pub tolerance: f64,
    pub keys: Vec<KeyVerdict>,
}

impl AdmissibilityReport {
    pub fn key(&self, key: &str) -> Option<&KeyVerdict> {
        self.keys.iter().find(|k| k.key == key)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "scheme {}: {}\n",
            self.scheme,
            if self.admissible { "admissible" } else { "INADMISSIBLE" }
        ));
        out.push_str(&format!(
            "{:<8} {:>10} {:>4} {:>14} {:>22} {:>6}\n",
            "key", "tau", "N0", "worst_slack", "worst_interval", "ok"
        ));
        for v in &self.keys {
            let slack = v
                .worst_slack
                .map(|s| format!("{s:.6}"))
                .unwrap_or_else(|| "-".into());
            let interval = v
                .worst_interval
                .map(|(a, b)| {
                    let plus = if v.worst_includes_end_switch { "+" } else { "" };
                    format!("[{a:.4}, {b:.4}{plus})")
                })
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "{:<8} {:>10.4} {:>4} {:>14} {:>22} {:>6}\n",
                v.key,
                v.tau,
                v.chatter_bound,
                slack,
                interval,
                if v.admissible { "yes" } else { "NO" }
            ));
        }
        out
    }
}

/// Per-key counters used while sweeping candidate intervals.
struct KeyState {
    key: PolicyKey,
    tau: f64,
    n0: u64,
    count: u64,
    time: f64,
    worst: Option<(f64, (f64, f64), bool)>,
}

/// Checks the counting inequality N ≤ N₀ + T/τ for every policy key over
/// every candidate interval of the signal.
///
/// Candidate interval endpoints are the switch instants plus the signal
/// endpoints; counts are constant and running times monotone between those,
/// so they are the extremal cases. For each right endpoint that is a switch
/// instant the checker also evaluates the just-after-switch supremum, where
/// the switch is counted but no successor time has accrued yet.
///
/// Violations are report content; only malformed inputs are errors. Keys the
/// signal never exercises are vacuously admissible.
pub fn check_admissible(
    signal: &SwitchingSignal,
    policy: &DwellPolicy,
) -> Result<AdmissibilityReport> {
    let table = policy.threshold_table()?;
    let segments = signal.segments();
    let n_segs = segments.len();

    // Boundary times b_0 = 0 .. b_k = horizon.
    let mut boundaries = Vec::with_capacity(n_segs + 1);
    let mut t = 0.0;
    boundaries.push(0.0);
    for seg in segments {
        t += seg.dwell;
        boundaries.push(t);
    }

    let mut keys: Vec<KeyState> = table
        .entries()
        .map(|(key, entry)| KeyState {
            key: *key,
            tau: entry.tau,
            n0: policy.chatter_bound(key),
            count: 0,
            time: 0.0,
            worst: None,
        })
        .collect();

    // Which key does a segment's running time accrue to, and which key does
    // a switch instant count against.
    let time_key = |seg_idx: usize| -> Option<PolicyKey> {
        match policy.scheme {
            Scheme::Adt => Some(PolicyKey::Global),
            Scheme::Mdadt => Some(PolicyKey::Mode(segments[seg_idx].mode)),
            Scheme::Sbasdt => (seg_idx > 0).then(|| {
                PolicyKey::Pair(OrderedPair {
                    to: segments[seg_idx].mode,
                    from: segments[seg_idx - 1].mode,
                })
            }),
            Scheme::Sbapdt => (seg_idx + 1 < n_segs).then(|| {
                PolicyKey::Pair(OrderedPair {
                    to: segments[seg_idx + 1].mode,
                    from: segments[seg_idx].mode,
                })
            }),
        }
    };
    let event_key = |seg_idx: usize| -> Option<PolicyKey> {
        if seg_idx == 0 {
            // The initial activation participates only in the per-mode count.
            return match policy.scheme {
                Scheme::Mdadt => Some(PolicyKey::Mode(segments[0].mode)),
                _ => None,
            };
        }
        match policy.scheme {
            Scheme::Adt => Some(PolicyKey::Global),
            Scheme::Mdadt => Some(PolicyKey::Mode(segments[seg_idx].mode)),
            Scheme::Sbasdt | Scheme::Sbapdt => Some(PolicyKey::Pair(OrderedPair {
                to: segments[seg_idx].mode,
                from: segments[seg_idx - 1].mode,
            })),
        }
    };

    let slack_of = |count: u64, time: f64, n0: u64, tau: f64| -> f64 {
        count as f64 - n0 as f64 - time / tau
    };

    for start in 0..n_segs {
        for key in &mut keys {
            key.count = 0;
            key.time = 0.0;
        }
        for end in start..n_segs {
            // Extend the interval [b_start, b_end) to [b_start, b_end+1):
            // segment `end` joins in full, along with its entry switch
            // (or, for the first segment of the signal, its activation).
            let ev = event_key(end);
            if !(end == 0 && start > 0) {
                if let Some(ev_key) = ev {
                    if let Some(state) = keys.iter_mut().find(|k| k.key == ev_key) {
                        state.count += 1;
                    }
                }
            }
            if let Some(t_key) = time_key(end) {
                if let Some(state) = keys.iter_mut().find(|k| k.key == t_key) {
                    state.time += segments[end].dwell;
                }
            }

            let interval = (boundaries[start], boundaries[end + 1]);
            for state in &mut keys {
                if state.tau <= 0.0 {
                    continue;
                }
                let slack = slack_of(state.count, state.time, state.n0, state.tau);
                if state.worst.map_or(true, |(w, _, _)| slack > w) {
                    state.worst = Some((slack, interval, false));
                }
            }

            // Supremum just after the next switch: it is counted before any
            // of its successor time accrues. Predecessor time is already in.
            if end + 1 < n_segs {
                if let Some(ev_key) = event_key(end + 1) {
                    if let Some(state) = keys.iter_mut().find(|k| k.key == ev_key) {
                        if state.tau > 0.0 {
                            let slack =
                                slack_of(state.count + 1, state.time, state.n0, state.tau);
                            if state.worst.map_or(true, |(w, _, _)| slack > w) {
                                state.worst = Some((slack, interval, true));
                            }
                        }
                    }
                }
            }
        }
    }

    let verdicts: Vec<KeyVerdict> = keys
        .iter()
        .map(|state| {
            let constrained = state.tau > 0.0;
            let (worst_slack, worst_interval, includes_end) = match state.worst {
                Some((s, iv, plus)) => (Some(s), Some(iv), plus),
                None => (None, None, false),
            };
            let admissible = !constrained || worst_slack.map_or(true, |s| s <= ADMISSIBILITY_TOL);
            KeyVerdict {
                key: state.key.to_string(),
                tau: state.tau,
                chatter_bound: state.n0,
                constrained,
                worst_slack,
                worst_interval,
                worst_includes_end_switch: includes_end,
                admissible,
            }
        })
        .collect();

    Ok(AdmissibilityReport {
        scheme: policy.scheme,
        admissible: verdicts.iter().all(|v| v.admissible),
        tolerance: ADMISSIBILITY_TOL,
        keys: verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pair(to: u32, from: u32) -> OrderedPair {
        OrderedPair { to: ModeId(to), from: ModeId(from) }
    }

    #[test]
    fn single_switch_statistics() {
        let signal = SwitchingSignal::from_pairs(&[(1, 1.0), (2, 1.0)]).unwrap();
        let stats = compute_statistics(&signal, 0.0, 2.0).unwrap();
        assert_eq!(stats.pair_count[&pair(2, 1)], 1);
        assert_abs_diff_eq!(stats.successor_time[&pair(2, 1)], 1.0);
        assert_abs_diff_eq!(stats.predecessor_time[&pair(2, 1)], 1.0);
        assert_abs_diff_eq!(stats.running_time[&ModeId(1)], 1.0);
        assert_abs_diff_eq!(stats.running_time[&ModeId(2)], 1.0);
        assert_eq!(stats.activations[&ModeId(1)], 1);
        assert_eq!(stats.activations[&ModeId(2)], 1);
    }

    #[test]
    fn alternating_signal_hand_count() {
        let signal =
            SwitchingSignal::from_pairs(&[(1, 1.0), (2, 1.0), (1, 1.0), (2, 1.0)]).unwrap();
        let stats = compute_statistics(&signal, 0.0, 4.0).unwrap();
        assert_eq!(stats.pair_count[&pair(2, 1)], 2);
        assert_eq!(stats.pair_count[&pair(1, 2)], 1);
        assert_abs_diff_eq!(stats.successor_time[&pair(2, 1)], 2.0);
        assert_abs_diff_eq!(stats.successor_time[&pair(1, 2)], 1.0);
    }

    #[test]
    fn interval_before_any_switch() {
        let signal = SwitchingSignal::from_pairs(&[(1, 1.0), (2, 1.0)]).unwrap();
        let stats = compute_statistics(&signal, 0.0, 0.5).unwrap();
        assert!(stats.pair_count.is_empty());
        assert_abs_diff_eq!(stats.running_time[&ModeId(1)], 0.5);
        // Predecessor time accrues as soon as the predecessor runs, whether
        // or not the switch instant itself is inside the interval.
        assert_abs_diff_eq!(stats.predecessor_time[&pair(2, 1)], 0.5);
    }

    #[test]
    fn counters_are_additive_under_splits() {
        let signal =
            SwitchingSignal::from_pairs(&[(1, 0.7), (3, 1.1), (2, 0.4), (1, 2.0), (3, 0.9)])
                .unwrap();
        let total = compute_statistics(&signal, 0.0, signal.duration()).unwrap();
        let mid = 1.3;
        let left = compute_statistics(&signal, 0.0, mid).unwrap();
        let right = compute_statistics(&signal, mid, signal.duration()).unwrap();
        for (key, &n) in &total.pair_count {
            let split = left.pair_count.get(key).copied().unwrap_or(0)
                + right.pair_count.get(key).copied().unwrap_or(0);
            assert_eq!(n, split, "pair {key}");
        }
        for (key, &t) in &total.successor_time {
            let split = left.successor_time.get(key).copied().unwrap_or(0.0)
                + right.successor_time.get(key).copied().unwrap_or(0.0);
            assert_abs_diff_eq!(t, split, epsilon = 1e-12);
        }
        for (key, &t) in &total.predecessor_time {
            let split = left.predecessor_time.get(key).copied().unwrap_or(0.0)
                + right.predecessor_time.get(key).copied().unwrap_or(0.0);
            assert_abs_diff_eq!(t, split, epsilon = 1e-12);
        }
    }

    #[test]
    fn running_time_sums_to_interval_length() {
        let signal = SwitchingSignal::from_pairs(&[(1, 0.7), (3, 1.1), (2, 0.4)]).unwrap();
        let stats = compute_statistics(&signal, 0.3, 1.9).unwrap();
        let total: f64 = stats.running_time.values().sum();
        assert_abs_diff_eq!(total, 1.6, epsilon = 1e-12);
    }

    #[test]
    fn interval_outside_horizon_is_error() {
        let signal = SwitchingSignal::from_pairs(&[(1, 1.0)]).unwrap();
        assert!(matches!(
            compute_statistics(&signal, 0.0, 2.0),
            Err(DwellError::IntervalOutOfRange(..))
        ));
        assert!(compute_statistics(&signal, 0.5, 0.5).is_err());
    }

    #[test]
    fn threshold_continuous_values() {
        let tau = threshold(Scheme::Sbasdt, TimeDomain::Continuous, 18.0, 3.0).unwrap();
        assert_abs_diff_eq!(tau, 18f64.ln() / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(round_half_away(tau, 2), 0.96);

        let tau = threshold(Scheme::Sbapdt, TimeDomain::Continuous, 18.0, 1.5).unwrap();
        assert_abs_diff_eq!(tau, 18f64.ln() / 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(round_half_away(tau, 1), 1.9);
    }

    #[test]
    fn threshold_mu_one_is_zero() {
        for domain in [TimeDomain::Continuous, TimeDomain::Discrete] {
            let tau = threshold(Scheme::Sbasdt, domain, 1.0, 0.5).unwrap();
            assert_eq!(tau, 0.0);
        }
    }

    #[test]
    fn threshold_discrete_uses_log_form() {
        // -ln 2 / ln(1 - 0.5) = 1 exactly.
        let tau = threshold(Scheme::Mdadt, TimeDomain::Discrete, 2.0, 0.5).unwrap();
        assert_eq!(tau, 1.0);
    }

    #[test]
    fn threshold_rejects_bad_parameters() {
        assert!(threshold(Scheme::Adt, TimeDomain::Continuous, 0.9, 1.0).is_err());
        assert!(threshold(Scheme::Adt, TimeDomain::Continuous, 2.0, 0.0).is_err());
        assert!(threshold(Scheme::Adt, TimeDomain::Discrete, 2.0, 1.0).is_err());
        assert!(threshold(Scheme::Adt, TimeDomain::Discrete, 2.0, -0.1).is_err());
    }

    fn demo_lambda() -> BTreeMap<ModeId, f64> {
        [(ModeId(1), 3.0), (ModeId(2), 1.5), (ModeId(3), 2.5)].into()
    }

    fn demo_mu_pairs() -> BTreeMap<OrderedPair, f64> {
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

    #[test]
    fn sbasdt_threshold_table_matches_hand_values() {
        let policy = DwellPolicy::new(
            Scheme::Sbasdt,
            TimeDomain::Continuous,
            demo_lambda(),
            MuSpec::PerPair(demo_mu_pairs()),
        )
        .unwrap();
        let table = policy.threshold_table().unwrap();
        let tau = |p, q| table.tau(&PolicyKey::Pair(pair(p, q))).unwrap();
        assert_abs_diff_eq!(tau(1, 2), 18f64.ln() / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(tau(1, 3), 13f64.ln() / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(tau(2, 1), 2.3f64.ln() / 1.5, epsilon = 1e-15);
        assert_eq!(tau(2, 3), 0.0);
        assert_abs_diff_eq!(tau(3, 2), 17f64.ln() / 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(tau(3, 1), 41f64.ln() / 2.5, epsilon = 1e-15);
    }

    #[test]
    fn sbapdt_threshold_table_uses_predecessor_rate() {
        let policy = DwellPolicy::new(
            Scheme::Sbapdt,
            TimeDomain::Continuous,
            demo_lambda(),
            MuSpec::PerPair(demo_mu_pairs()),
        )
        .unwrap();
        let table = policy.threshold_table().unwrap();
        let tau = |p, q| table.tau(&PolicyKey::Pair(pair(p, q))).unwrap();
        assert_abs_diff_eq!(tau(1, 2), 18f64.ln() / 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(tau(1, 3), 13f64.ln() / 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(tau(2, 1), 2.3f64.ln() / 3.0, epsilon = 1e-15);
        assert_eq!(tau(2, 3), 0.0);
        assert_abs_diff_eq!(tau(3, 2), 17f64.ln() / 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(tau(3, 1), 41f64.ln() / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn mode_keyed_mu_collapses_sequence_table_to_mode_table() {
        let mode_mu: BTreeMap<ModeId, f64> =
            [(ModeId(1), 18.0), (ModeId(2), 2.3), (ModeId(3), 41.0)].into();
        let mdadt = DwellPolicy::new(
            Scheme::Mdadt,
            TimeDomain::Continuous,
            demo_lambda(),
            MuSpec::PerMode(mode_mu.clone()),
        )
        .unwrap();
        let sbasdt = DwellPolicy::new(
            Scheme::Sbasdt,
            TimeDomain::Continuous,
            demo_lambda(),
            MuSpec::PerMode(mode_mu),
        )
        .unwrap();
        let mode_table = mdadt.threshold_table().unwrap();
        let pair_table = sbasdt.threshold_table().unwrap();
        for (key, entry) in pair_table.entries() {
            let PolicyKey::Pair(p) = key else { panic!("expected pair keys") };
            let mode_tau = mode_table.tau(&PolicyKey::Mode(p.to)).unwrap();
            // Bitwise identical: the same formula on the same inputs.
            assert_eq!(entry.tau.to_bits(), mode_tau.to_bits());
        }
    }

    #[test]
    fn policy_document_round_trip() {
        let doc = r#"{
            "scheme": "sbasdt",
            "lambda": {"1": 3.0, "2": 1.5, "3": 2.5},
            "mu": {"1|2": 18.0, "2|1": 2.3, "3|1": 41.0, "1|3": 13.0, "2|3": 1.0, "3|2": 17.0},
            "chatter": {"1|2": 2}
        }"#;
        let policy = DwellPolicy::from_json(doc).unwrap();
        assert_eq!(policy.scheme, Scheme::Sbasdt);
        assert_eq!(policy.time_domain, TimeDomain::Continuous);
        assert_eq!(policy.chatter_bound(&PolicyKey::Pair(pair(1, 2))), 2);
        assert_eq!(policy.chatter_bound(&PolicyKey::Pair(pair(2, 1))), DEFAULT_CHATTER);
        let round = DwellPolicy::from_json(&policy.to_json()).unwrap();
        assert_eq!(round.mu, policy.mu);
    }

    #[test]
    fn policy_rejects_mu_below_one() {
        let doc = r#"{"scheme": "mdadt", "lambda": {"1": 1.0}, "mu": {"1": 0.5}}"#;
        assert!(matches!(DwellPolicy::from_json(doc), Err(DwellError::MuOutOfRange(..))));
    }

    fn two_mode_mdadt(tau1_mu: f64, tau2_mu: f64) -> DwellPolicy {
        // lambda = 1 so tau = ln(mu): pick mu = e^tau for target taus.
        DwellPolicy::new(
            Scheme::Mdadt,
            TimeDomain::Continuous,
            [(ModeId(1), 1.0), (ModeId(2), 1.0)].into(),
            MuSpec::PerMode([(ModeId(1), tau1_mu.exp()), (ModeId(2), tau2_mu.exp())].into()),
        )
        .unwrap()
    }

    #[test]
    fn single_segment_signal_is_admissible() {
        let signal = SwitchingSignal::from_pairs(&[(1, 5.0)]).unwrap();
        let report = check_admissible(&signal, &two_mode_mdadt(1.0, 2.0)).unwrap();
        assert!(report.admissible);
    }

    #[test]
    fn per_event_dwell_at_threshold_is_admissible() {
        // tau_1 = 1, tau_2 = 2; every dwell meets its threshold exactly.
        let signal =
            SwitchingSignal::from_pairs(&[(1, 1.0), (2, 2.0), (1, 1.0), (2, 2.0), (1, 1.0)])
                .unwrap();
        let report = check_admissible(&signal, &two_mode_mdadt(1.0, 2.0)).unwrap();
        assert!(report.admissible, "{}", report.render());
    }

    #[test]
    fn chattering_below_threshold_is_reported_with_interval() {
        let mut segs = Vec::new();
        for i in 0..20 {
            segs.push((if i % 2 == 0 { 1 } else { 2 }, 0.5));
        }
        let signal = SwitchingSignal::from_pairs(&segs).unwrap();
        // tau = 1 for both modes, chatter bound 0.
        let policy = two_mode_mdadt(1.0, 1.0).with_chatter(
            [(PolicyKey::Mode(ModeId(1)), 0), (PolicyKey::Mode(ModeId(2)), 0)].into(),
        );
        let report = check_admissible(&signal, &policy).unwrap();
        assert!(!report.admissible);
        let verdict = report.key("1").unwrap();
        assert!(verdict.worst_slack.unwrap() > 0.0);
        assert!(verdict.worst_interval.is_some());
    }

    #[test]
    fn unconstrained_mu_one_key_passes_any_dwell() {
        let policy = DwellPolicy::new(
            Scheme::Sbasdt,
            TimeDomain::Continuous,
            [(ModeId(1), 1.0), (ModeId(2), 1.0)].into(),
            MuSpec::PerPair([(pair(1, 2), 2.0), (pair(2, 1), 1.0)].into()),
        )
        .unwrap();
        // Mode 2 dwells arbitrarily briefly; its entry pair 2|1 has mu = 1.
        let signal = SwitchingSignal::from_pairs(&[
            (1, 0.8),
            (2, 1e-6),
            (1, 0.8),
            (2, 1e-6),
            (1, 0.8),
        ])
        .unwrap();
        let report = check_admissible(&signal, &policy).unwrap();
        assert!(report.admissible, "{}", report.render());
        assert!(!report.key("2|1").unwrap().constrained);
    }

    #[test]
    fn sbapdt_budgets_the_predecessor() {
        // Pair 2|1 with tau = 1 under SBAPDT constrains mode 1's dwell
        // before each switch into 2, not mode 2's dwell after it.
        let policy = DwellPolicy::new(
            Scheme::Sbapdt,
            TimeDomain::Continuous,
            [(ModeId(1), 1.0), (ModeId(2), 1.0)].into(),
            MuSpec::PerPair([(pair(2, 1), std::f64::consts::E), (pair(1, 2), 1.0)].into()),
        )
        .unwrap();
        let short_predecessor = SwitchingSignal::from_pairs(&[
            (1, 0.2),
            (2, 5.0),
            (1, 0.2),
            (2, 5.0),
            (1, 0.2),
            (2, 5.0),
        ])
        .unwrap();
        assert!(!check_admissible(&short_predecessor, &policy).unwrap().admissible);

        let long_predecessor =
            SwitchingSignal::from_pairs(&[(1, 1.5), (2, 0.1), (1, 1.5), (2, 0.1), (1, 1.5)])
                .unwrap();
        assert!(check_admissible(&long_predecessor, &policy).unwrap().admissible);
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(round_half_away(0.125, 2), 0.13);
        assert_eq!(round_half_away(-0.125, 2), -0.13);
        assert_eq!(round_half_away(1.1333, 2), 1.13);
        assert_eq!(round_half_away(1.1333, 1), 1.1);
        assert_eq!(format_rounded(0.9634572526320548, 2), "0.96");
    }
}
