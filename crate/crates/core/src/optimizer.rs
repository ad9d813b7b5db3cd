//! Parameter sweeps, safety/liveness trade-offs and cost-driven search.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{analyze_dp, AnalysisError};
use crate::fault_model::{Deployment, FaultModelError, FaultProfile, Node, ProtocolKind};
use crate::predicates::{LivenessReading, PredicateError, QuorumSpec};
use crate::report::ReliabilityReport;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("row n={n}: {reason}")]
    Rule { n: usize, reason: String },
    #[error("row n={n}: {source}")]
    Quorum { n: usize, source: PredicateError },
    #[error("probability {p}: {source}")]
    Profile { p: f64, source: FaultModelError },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("invalid target: {0}")]
    Target(String),
    #[error("{0}")]
    Input(String),
}

/// Quorum sizes independent of `n`. PBFT needs `q_eq` and `q_vc_t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuorumSizes {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_eq: Option<usize>,
    pub q_per: usize,
    pub q_vc: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_vc_t: Option<usize>,
}

impl QuorumSizes {
    pub fn raft(q_per: usize, q_vc: usize) -> Self {
        QuorumSizes { q_eq: None, q_per, q_vc, q_vc_t: None }
    }

    pub fn pbft(q_eq: usize, q_per: usize, q_vc: usize, q_vc_t: usize) -> Self {
        QuorumSizes { q_eq: Some(q_eq), q_per, q_vc, q_vc_t: Some(q_vc_t) }
    }

    fn spec(&self, protocol: ProtocolKind, n: usize) -> Result<QuorumSpec, OptimizerError> {
        let spec = match (protocol, self.q_eq, self.q_vc_t) {
            (ProtocolKind::Raft, _, _) => QuorumSpec::raft(n, self.q_per, self.q_vc),
            (ProtocolKind::Pbft, Some(e), Some(t)) => QuorumSpec::pbft(n, e, self.q_per, self.q_vc, t),
            (ProtocolKind::Pbft, _, _) => {
                return Err(OptimizerError::Rule { n, reason: "pbft quorums need q_eq and q_vc_t".into() })
            }
        };
        spec.map_err(|source| OptimizerError::Quorum { n, source })
    }
}

/// Maps a cluster size to quorum sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuorumRule {
    /// Raft `q_per = q_vc = floor(n/2) + 1`.
    Majority,
    /// Raft majority shifted by a constant.
    MajorityOffset(i64),
    /// PBFT with `f = floor((n-1)/3)`: `q_eq = q_per = q_vc = n - f`, `q_vc_t = f + 1`.
    ByzantineThreshold,
    Fixed(QuorumSizes),
    Explicit(BTreeMap<usize, QuorumSizes>),
}

impl QuorumRule {
    /// The four PBFT configurations of the reference reliability table.
    pub fn pbft_reference_table() -> Self {
        QuorumRule::Explicit(BTreeMap::from([
            (4, QuorumSizes::pbft(3, 3, 3, 2)),
            (5, QuorumSizes::pbft(4, 4, 4, 2)),
            (7, QuorumSizes::pbft(5, 5, 5, 3)),
            (8, QuorumSizes::pbft(6, 6, 6, 3)),
        ]))
    }

    pub fn quorums(&self, protocol: ProtocolKind, n: usize) -> Result<QuorumSpec, OptimizerError> {
        let raft_only = |name: &str| OptimizerError::Rule { n, reason: format!("{name} applies to raft only") };
        match self {
            QuorumRule::Majority | QuorumRule::MajorityOffset(_) if protocol != ProtocolKind::Raft => {
                Err(raft_only("majority rule"))
            }
            QuorumRule::Majority => QuorumSizes::raft(n / 2 + 1, n / 2 + 1).spec(protocol, n),
            QuorumRule::MajorityOffset(off) => {
                let q = (n / 2 + 1) as i64 + off;
                if q < 1 {
                    return Err(OptimizerError::Rule { n, reason: format!("offset {off} gives quorum {q}") });
                }
                QuorumSizes::raft(q as usize, q as usize).spec(protocol, n)
            }
            QuorumRule::ByzantineThreshold => {
                if protocol != ProtocolKind::Pbft {
                    return Err(OptimizerError::Rule {
                        n,
                        reason: "byzantine threshold rule applies to pbft only".into(),
                    });
                }
                let f = n.saturating_sub(1) / 3;
                QuorumSizes::pbft(n - f, n - f, n - f, f + 1).spec(protocol, n)
            }
            QuorumRule::Fixed(sizes) => sizes.spec(protocol, n),
            QuorumRule::Explicit(map) => match map.get(&n) {
                Some(sizes) => sizes.spec(protocol, n),
                None => Err(OptimizerError::Rule { n, reason: "no quorum sizes listed for this n".into() }),
            },
        }
    }
}

/// Raft sweeps vary the crash probability; PBFT sweeps the Byzantine one.
pub fn uniform_profile(protocol: ProtocolKind, p: f64) -> Result<FaultProfile, OptimizerError> {
    let r = match protocol {
        ProtocolKind::Raft => FaultProfile::crash(p),
        ProtocolKind::Pbft => FaultProfile::byzantine(p),
    };
    r.map_err(|source| OptimizerError::Profile { p, source })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub p: f64,
    pub p_safe: f64,
    pub p_live: f64,
    pub p_safe_and_live: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub quorums: QuorumSpec,
    pub cells: Vec<SweepCell>,
}

/// Exact results for every `(n, p)` pair, one row per `n`.
pub fn sweep_table(
    protocol: ProtocolKind,
    n_values: &[usize],
    rule: &QuorumRule,
    p_values: &[f64],
) -> Result<Vec<SweepRow>, OptimizerError> {
    sweep_table_with_reading(protocol, n_values, rule, p_values, LivenessReading::Corrected)
}

/// [`sweep_table`] with an explicit PBFT liveness reading.
pub fn sweep_table_with_reading(
    protocol: ProtocolKind,
    n_values: &[usize],
    rule: &QuorumRule,
    p_values: &[f64],
    reading: LivenessReading,
) -> Result<Vec<SweepRow>, OptimizerError> {
    let rows: Vec<(usize, QuorumSpec)> = n_values
        .iter()
        .map(|&n| rule.quorums(protocol, n).map(|q| (n, q.with_reading(reading))))
        .collect::<Result<_, _>>()?;
    let profiles: Vec<FaultProfile> =
        p_values.iter().map(|&p| uniform_profile(protocol, p)).collect::<Result<_, _>>()?;
    rows.into_par_iter()
        .map(|(n, quorums)| {
            let cells = p_values
                .iter()
                .zip(&profiles)
                .map(|(&p, profile)| {
                    let r = analyze_dp(&Deployment::homogeneous(n, *profile), &quorums)?;
                    Ok(SweepCell { p, p_safe: r.p_safe, p_live: r.p_live, p_safe_and_live: r.p_safe_and_live })
                })
                .collect::<Result<_, OptimizerError>>()?;
            Ok(SweepRow { n, quorums, cells })
        })
        .collect()
}

/// `p` as a percentage with `decimals` places, rounding halves away from zero.
pub fn format_percent(p: f64, decimals: usize) -> String {
    let scale = 10f64.powi(decimals as i32);
    let v = (p * 100.0 * scale).round() / scale;
    format!("{v:.decimals$}%")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub quorums: QuorumSpec,
    pub p_safe: f64,
    pub p_live: f64,
    pub p_safe_and_live: f64,
    /// No other candidate is at least as safe and as live and strictly better in one.
    pub pareto: bool,
}

/// How candidate `candidate` compares with candidate `base`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRatio {
    pub base: usize,
    pub candidate: usize,
    /// `(1 - safe_base) / (1 - safe_candidate)`; `None` when the candidate never fails.
    pub safety_gain: Option<f64>,
    /// `(1 - live_candidate) / (1 - live_base)`; `None` when the base never fails.
    pub liveness_loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub p: f64,
    pub points: Vec<FrontierPoint>,
    pub ratios: Vec<PairRatio>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

fn homogeneous_report(protocol: ProtocolKind, q: &QuorumSpec, p: f64) -> Result<ReliabilityReport, OptimizerError> {
    if q.protocol() != protocol {
        return Err(OptimizerError::Input(format!("candidate {q} is not {protocol}")));
    }
    let d = Deployment::homogeneous(q.n(), uniform_profile(protocol, p)?);
    Ok(analyze_dp(&d, q)?)
}

/// Exact safety and liveness per candidate with all pairwise ratios.
pub fn tradeoff_frontier(
    protocol: ProtocolKind,
    candidates: &[QuorumSpec],
    p: f64,
) -> Result<Frontier, OptimizerError> {
    let reports: Vec<ReliabilityReport> =
        candidates.par_iter().map(|q| homogeneous_report(protocol, q, p)).collect::<Result<_, _>>()?;
    let dominated = |i: usize| {
        reports.iter().enumerate().any(|(j, o)| {
            let r = &reports[i];
            j != i && o.p_safe >= r.p_safe && o.p_live >= r.p_live && (o.p_safe > r.p_safe || o.p_live > r.p_live)
        })
    };
    let points = reports
        .iter()
        .enumerate()
        .map(|(i, r)| FrontierPoint {
            quorums: r.quorums,
            p_safe: r.p_safe,
            p_live: r.p_live,
            p_safe_and_live: r.p_safe_and_live,
            pareto: !dominated(i),
        })
        .collect();
    let mut ratios = Vec::new();
    for (i, b) in reports.iter().enumerate() {
        for (j, c) in reports.iter().enumerate() {
            if i != j {
                ratios.push(PairRatio {
                    base: i,
                    candidate: j,
                    safety_gain: ratio(1.0 - b.p_safe, 1.0 - c.p_safe),
                    liveness_loss: ratio(1.0 - c.p_live, 1.0 - b.p_live),
                });
            }
        }
    }
    Ok(Frontier { p, points, ratios })
}

/// Safety gain and liveness loss of `candidate` over `base` across `p_values`.
pub fn ratio_sweep(
    protocol: ProtocolKind,
    base: &QuorumSpec,
    candidate: &QuorumSpec,
    p_values: &[f64],
) -> Result<Vec<(f64, PairRatio)>, OptimizerError> {
    p_values
        .iter()
        .map(|&p| {
            let f = tradeoff_frontier(protocol, &[*base, *candidate], p)?;
            Ok((p, f.ratios[0]))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeClass {
    pub label: String,
    pub profile: FaultProfile,
    pub unit_cost: f64,
}

impl NodeClass {
    pub fn new(label: impl Into<String>, profile: FaultProfile, unit_cost: f64) -> Self {
        NodeClass { label: label.into(), profile, unit_cost }
    }
}

/// Required safe-and-live probability.
///
/// `Printed` targets are met when the value, rounded to the same number of
/// decimals as the target percentage, reaches it: `"99.97%"` accepts
/// 0.999686.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReliabilityTarget {
    Probability(f64),
    Printed { percent: f64, decimals: u32 },
}

impl ReliabilityTarget {
    pub fn is_met(&self, p: f64) -> bool {
        match *self {
            ReliabilityTarget::Probability(t) => p >= t,
            ReliabilityTarget::Printed { percent, decimals } => {
                let scale = 10f64.powi(decimals as i32);
                (p * 100.0 * scale).round() >= (percent * scale).round()
            }
        }
    }

    fn check(&self) -> Result<(), OptimizerError> {
        let p = match *self {
            ReliabilityTarget::Probability(t) => t,
            ReliabilityTarget::Printed { percent, .. } => percent / 100.0,
        };
        if p > 0.0 && p <= 1.0 {
            Ok(())
        } else {
            Err(OptimizerError::Target(format!("{self} is outside (0, 1]")))
        }
    }
}

impl fmt::Display for ReliabilityTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ReliabilityTarget::Probability(t) => write!(f, "{t}"),
            ReliabilityTarget::Printed { percent, decimals } => {
                write!(f, "{percent:.prec$}%", prec = decimals as usize)
            }
        }
    }
}

impl FromStr for ReliabilityTarget {
    type Err = OptimizerError;

    /// `"0.9997"` is a probability; `"99.97%"` a printed percentage.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || OptimizerError::Target(format!("cannot parse {s:?}"));
        let target = match s.strip_suffix('%') {
            Some(num) => {
                let num = num.trim();
                let decimals = num.split_once('.').map_or(0, |(_, d)| d.len()) as u32;
                ReliabilityTarget::Printed { percent: num.parse().map_err(|_| bad())?, decimals }
            }
            None => ReliabilityTarget::Probability(s.parse().map_err(|_| bad())?),
        };
        target.check()?;
        Ok(target)
    }
}

/// A deployment built from per-class node counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    pub counts: Vec<usize>,
    pub n: usize,
    pub quorums: QuorumSpec,
    pub total_cost: f64,
    pub reliability: ReliabilityReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum OptimizeOutcome {
    Found(Composition),
    /// Nothing met the target; `best` has the highest safe-and-live probability.
    Unattainable {
        best: Option<Composition>,
    },
}

/// Nodes for `counts[i]` members of `classes[i]`, ids `"{label}{k}"`.
pub fn composition_deployment(classes: &[NodeClass], counts: &[usize]) -> Deployment {
    let mut nodes = Vec::new();
    for (class, &count) in classes.iter().zip(counts) {
        for k in 0..count {
            nodes.push(
                Node::new(format!("{}{k}", class.label), class.profile)
                    .with_class(class.label.clone())
                    .with_cost(class.unit_cost),
            );
        }
    }
    Deployment::new(nodes)
}

/// Every way to split `n` nodes across `k` classes, in lexicographic order.
pub fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(left: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            go(left - c, k - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        go(n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

fn cheaper(a: &Composition, b: &Composition) -> Ordering {
    a.total_cost.total_cmp(&b.total_cost).then(a.n.cmp(&b.n)).then_with(|| a.counts.cmp(&b.counts))
}

/// Cheapest composition of at most `max_n` nodes meeting `target`.
///
/// Sizes for which `rule` defines no quorums are skipped. Ties go to fewer
/// nodes, then to the lexicographically smaller count vector.
pub fn optimize_deployment(
    classes: &[NodeClass],
    target: ReliabilityTarget,
    protocol: ProtocolKind,
    max_n: usize,
    rule: &QuorumRule,
) -> Result<OptimizeOutcome, OptimizerError> {
    target.check()?;
    if classes.is_empty() {
        return Err(OptimizerError::Input("no node classes".into()));
    }
    if max_n == 0 {
        return Err(OptimizerError::Input("max_n must be at least 1".into()));
    }
    if let Some(c) = classes.iter().find(|c| !c.unit_cost.is_finite() || c.unit_cost < 0.0) {
        return Err(OptimizerError::Input(format!("class {} has invalid cost {}", c.label, c.unit_cost)));
    }
    let mut work = Vec::new();
    for n in 1..=max_n {
        let quorums = match rule.quorums(protocol, n) {
            Ok(q) => q,
            Err(OptimizerError::Rule { .. }) => continue,
            Err(e) => return Err(e),
        };
        work.extend(compositions(n, classes.len()).into_iter().map(|c| (c, quorums)));
    }
    let evaluated: Vec<Composition> = work
        .into_par_iter()
        .map(|(counts, quorums)| {
            let d = composition_deployment(classes, &counts);
            let reliability = analyze_dp(&d, &quorums)?;
            Ok(Composition { n: d.len(), total_cost: d.total_cost(), counts, quorums, reliability })
        })
        .collect::<Result<_, OptimizerError>>()?;
    let found = evaluated.iter().filter(|c| target.is_met(c.reliability.p_safe_and_live)).min_by(|a, b| cheaper(a, b));
    Ok(match found {
        Some(c) => OptimizeOutcome::Found(c.clone()),
        None => OptimizeOutcome::Unattainable {
            best: evaluated.into_iter().max_by(|a, b| {
                a.reliability.p_safe_and_live.total_cmp(&b.reliability.p_safe_and_live).then_with(|| cheaper(b, a))
            }),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn classes() -> Vec<NodeClass> {
        vec![
            NodeClass::new("A", FaultProfile::crash(0.01).unwrap(), 10.0),
            NodeClass::new("B", FaultProfile::crash(0.08).unwrap(), 1.0),
        ]
    }

    #[test]
    fn rules() {
        let r = QuorumRule::Majority.quorums(ProtocolKind::Raft, 9).unwrap();
        assert_eq!((r.q_per(), r.q_vc()), (5, 5));
        let r = QuorumRule::MajorityOffset(-1).quorums(ProtocolKind::Raft, 4).unwrap();
        assert_eq!((r.q_per(), r.q_vc()), (2, 2));
        assert!(QuorumRule::Majority.quorums(ProtocolKind::Pbft, 4).is_err());
        let table = QuorumRule::pbft_reference_table();
        for n in [4, 5, 7, 8] {
            let q = table.quorums(ProtocolKind::Pbft, n).unwrap();
            if n != 5 {
                assert_eq!(q, QuorumRule::ByzantineThreshold.quorums(ProtocolKind::Pbft, n).unwrap());
            }
        }
        let err = table.quorums(ProtocolKind::Pbft, 6).unwrap_err();
        assert!(err.to_string().contains("n=6"));
        let err = QuorumRule::Fixed(QuorumSizes::raft(4, 4)).quorums(ProtocolKind::Raft, 3).unwrap_err();
        assert!(matches!(err, OptimizerError::Quorum { n: 3, .. }));
    }

    #[test]
    fn raft_sweep_cells() {
        let rows = sweep_table(ProtocolKind::Raft, &[7], &QuorumRule::Majority, &[0.04]).unwrap();
        assert_eq!(format_percent(rows[0].cells[0].p_safe_and_live, 3), "99.992%");
        assert!(sweep_table(ProtocolKind::Raft, &[], &QuorumRule::Majority, &[0.01]).unwrap().is_empty());
    }

    #[test]
    fn pbft_sweep_cells() {
        let rows = sweep_table(ProtocolKind::Pbft, &[8], &QuorumRule::pbft_reference_table(), &[0.01]).unwrap();
        assert_eq!(format_percent(rows[0].cells[0].p_safe, 5), "99.99993%");
    }

    #[test]
    fn sweep_reports_bad_row() {
        let err = sweep_table(ProtocolKind::Pbft, &[4, 6], &QuorumRule::pbft_reference_table(), &[0.01]).unwrap_err();
        assert!(err.to_string().starts_with("row n=6"), "{err}");
    }

    #[test]
    fn percent_rounding() {
        assert_eq!(format_percent(0.999702, 2), "99.97%");
        assert_eq!(format_percent(0.9999999878, 6), "99.999999%");
        assert_eq!(format_percent(0.5, 0), "50%");
    }

    #[test]
    fn frontier_ratios() {
        let a = QuorumSpec::pbft(4, 3, 3, 3, 2).unwrap();
        let b = QuorumSpec::pbft(5, 4, 4, 4, 2).unwrap();
        let f = tradeoff_frontier(ProtocolKind::Pbft, &[a, b], 0.01).unwrap();
        let r = f.ratios[0];
        assert!(close(r.liveness_loss.unwrap(), 1.65557, 1e-4));
        assert!(close(r.safety_gain.unwrap(), 60.1009, 1e-3));
        assert!(f.points.iter().all(|p| p.pareto));
    }

    #[test]
    fn target_parsing() {
        assert_eq!(
            "99.97%".parse::<ReliabilityTarget>().unwrap(),
            ReliabilityTarget::Printed { percent: 99.97, decimals: 2 }
        );
        assert_eq!("0.9997".parse::<ReliabilityTarget>().unwrap(), ReliabilityTarget::Probability(0.9997));
        assert!("1.5".parse::<ReliabilityTarget>().is_err());
        assert!("0".parse::<ReliabilityTarget>().is_err());
        assert!("abc%".parse::<ReliabilityTarget>().is_err());
        let printed = ReliabilityTarget::Printed { percent: 99.97, decimals: 2 };
        assert!(printed.is_met(0.9996864));
        assert!(!printed.is_met(0.9996));
    }

    #[test]
    fn printed_target_picks_nine_cheap_nodes() {
        let target = "99.97%".parse().unwrap();
        let out = optimize_deployment(&classes(), target, ProtocolKind::Raft, 9, &QuorumRule::Majority).unwrap();
        let OptimizeOutcome::Found(c) = out else { panic!("{out:?}") };
        assert_eq!(c.counts, vec![0, 9]);
        assert_eq!(c.total_cost, 9.0);
        assert!(close(c.reliability.p_safe_and_live, 0.9996864181462726, 1e-12));
    }

    #[test]
    fn literal_target() {
        let t = ReliabilityTarget::Probability(0.9997);
        let out = optimize_deployment(&classes(), t, ProtocolKind::Raft, 9, &QuorumRule::Majority).unwrap();
        let OptimizeOutcome::Found(c) = out else { panic!() };
        assert_eq!((c.counts.clone(), c.total_cost), (vec![1, 8], 18.0));
        let out = optimize_deployment(&classes(), t, ProtocolKind::Raft, 11, &QuorumRule::Majority).unwrap();
        let OptimizeOutcome::Found(c) = out else { panic!() };
        assert_eq!((c.counts, c.total_cost), (vec![0, 11], 11.0));
    }

    #[test]
    fn certainty_is_unattainable() {
        let t = ReliabilityTarget::Probability(1.0);
        let out = optimize_deployment(&classes(), t, ProtocolKind::Raft, 5, &QuorumRule::Majority).unwrap();
        let OptimizeOutcome::Unattainable { best: Some(best) } = out else { panic!() };
        assert!(best.reliability.p_safe_and_live < 1.0);
    }

    #[test]
    fn single_node() {
        let a = vec![NodeClass::new("A", FaultProfile::crash(0.01).unwrap(), 10.0)];
        let rule = QuorumRule::Fixed(QuorumSizes::raft(1, 1));
        let out = optimize_deployment(&a, ReliabilityTarget::Probability(0.9), ProtocolKind::Raft, 1, &rule).unwrap();
        let OptimizeOutcome::Found(c) = out else { panic!() };
        assert_eq!(c.counts, vec![1]);
        assert!(close(c.reliability.p_live, 0.99, 1e-15));
    }

    #[test]
    fn composition_listing() {
        assert_eq!(compositions(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(compositions(3, 3).len(), 10);
        assert_eq!(compositions(4, 1), vec![vec![4]]);
    }
}
