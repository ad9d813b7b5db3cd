//! Safety and liveness predicates over failure counts.
//!
//! For a fixed set of quorum sizes, whether a failure configuration is safe
//! or live depends only on how many nodes are correct, crashed and
//! Byzantine. That is what lets the exact analysis work on count
//! distributions instead of individual configurations.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fault_model::ProtocolKind;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PredicateError {
    #[error("node count must be at least 1")]
    NoNodes,
    #[error("quorum {name}={size} outside 1..={n}")]
    QuorumSize { name: &'static str, size: usize, n: usize },
    #[error("configuration has {len} nodes but quorums are for {n}")]
    LengthMismatch { len: usize, n: usize },
    #[error("node {index} is Byzantine but raft offers no Byzantine guarantees")]
    ByzantineInRaft { index: usize },
}

/// How the first PBFT liveness condition is read.
///
/// [`LivenessReading::Literal`] bounds Byzantine nodes by `q_vc_t - q_vc`,
/// negative for every standard quorum choice, so no configuration is live.
/// [`LivenessReading::Corrected`] uses `q_vc - q_vc_t`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LivenessReading {
    #[default]
    Corrected,
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RaftQuorums {
    pub n: usize,
    pub q_per: usize,
    pub q_vc: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PbftQuorums {
    pub n: usize,
    pub q_eq: usize,
    pub q_per: usize,
    pub q_vc: usize,
    pub q_vc_t: usize,
    #[serde(default)]
    pub reading: LivenessReading,
}

/// Protocol plus quorum sizes for a deployment of `n` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "lowercase")]
pub enum QuorumSpec {
    Raft(RaftQuorums),
    Pbft(PbftQuorums),
}

fn check_size(name: &'static str, size: usize, n: usize) -> Result<(), PredicateError> {
    if size == 0 || size > n {
        Err(PredicateError::QuorumSize { name, size, n })
    } else {
        Ok(())
    }
}

impl QuorumSpec {
    pub fn raft(n: usize, q_per: usize, q_vc: usize) -> Result<Self, PredicateError> {
        if n == 0 {
            return Err(PredicateError::NoNodes);
        }
        check_size("q_per", q_per, n)?;
        check_size("q_vc", q_vc, n)?;
        Ok(QuorumSpec::Raft(RaftQuorums { n, q_per, q_vc }))
    }

    pub fn pbft(n: usize, q_eq: usize, q_per: usize, q_vc: usize, q_vc_t: usize) -> Result<Self, PredicateError> {
        if n == 0 {
            return Err(PredicateError::NoNodes);
        }
        check_size("q_eq", q_eq, n)?;
        check_size("q_per", q_per, n)?;
        check_size("q_vc", q_vc, n)?;
        check_size("q_vc_t", q_vc_t, n)?;
        Ok(QuorumSpec::Pbft(PbftQuorums { n, q_eq, q_per, q_vc, q_vc_t, reading: LivenessReading::Corrected }))
    }

    /// Raft with `q_per = q_vc = floor(n/2) + 1`.
    pub fn raft_majority(n: usize) -> Result<Self, PredicateError> {
        Self::raft(n, n / 2 + 1, n / 2 + 1)
    }

    /// Same quorums, with the given PBFT liveness reading. No-op for Raft.
    pub fn with_reading(self, reading: LivenessReading) -> Self {
        match self {
            QuorumSpec::Pbft(q) => QuorumSpec::Pbft(PbftQuorums { reading, ..q }),
            raft => raft,
        }
    }

    pub fn protocol(&self) -> ProtocolKind {
        match self {
            QuorumSpec::Raft(_) => ProtocolKind::Raft,
            QuorumSpec::Pbft(_) => ProtocolKind::Pbft,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            QuorumSpec::Raft(q) => q.n,
            QuorumSpec::Pbft(q) => q.n,
        }
    }

    pub fn q_per(&self) -> usize {
        match self {
            QuorumSpec::Raft(q) => q.q_per,
            QuorumSpec::Pbft(q) => q.q_per,
        }
    }

    pub fn q_vc(&self) -> usize {
        match self {
            QuorumSpec::Raft(q) => q.q_vc,
            QuorumSpec::Pbft(q) => q.q_vc,
        }
    }

    pub fn q_eq(&self) -> Option<usize> {
        match self {
            QuorumSpec::Raft(_) => None,
            QuorumSpec::Pbft(q) => Some(q.q_eq),
        }
    }

    pub fn q_vc_t(&self) -> Option<usize> {
        match self {
            QuorumSpec::Raft(_) => None,
            QuorumSpec::Pbft(q) => Some(q.q_vc_t),
        }
    }

    /// Largest quorum that must be assembled from correct nodes for progress.
    pub fn max_progress_quorum(&self) -> usize {
        match self {
            QuorumSpec::Raft(q) => q.q_per.max(q.q_vc),
            QuorumSpec::Pbft(q) => q.q_eq.max(q.q_per).max(q.q_vc),
        }
    }

    /// Re-checks the size invariants, e.g. after deserialization.
    pub fn check(&self) -> Result<(), PredicateError> {
        match *self {
            QuorumSpec::Raft(q) => Self::raft(q.n, q.q_per, q.q_vc).map(|_| ()),
            QuorumSpec::Pbft(q) => Self::pbft(q.n, q.q_eq, q.q_per, q.q_vc, q.q_vc_t).map(|_| ()),
        }
    }
}

impl fmt::Display for QuorumSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuorumSpec::Raft(q) => write!(f, "raft n={} q_per={} q_vc={}", q.n, q.q_per, q.q_vc),
            QuorumSpec::Pbft(q) => {
                write!(f, "pbft n={} q_eq={} q_per={} q_vc={} q_vc_t={}", q.n, q.q_eq, q.q_per, q.q_vc, q.q_vc_t)
            }
        }
    }
}

/// Status of one node for the whole analysis epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    Correct,
    Crashed,
    Byzantine,
}

impl NodeStatus {
    pub fn symbol(self) -> char {
        match self {
            NodeStatus::Correct => 'C',
            NodeStatus::Crashed => 'X',
            NodeStatus::Byzantine => 'B',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'C' => Some(NodeStatus::Correct),
            'X' => Some(NodeStatus::Crashed),
            'B' => Some(NodeStatus::Byzantine),
            _ => None,
        }
    }
}

/// Summary of a failure configuration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CountVector {
    pub correct: usize,
    pub crashed: usize,
    pub byz: usize,
}

impl CountVector {
    pub fn new(correct: usize, crashed: usize, byz: usize) -> Self {
        CountVector { correct, crashed, byz }
    }

    pub fn n(&self) -> usize {
        self.correct + self.crashed + self.byz
    }
}

/// Status of every node, aligned with the deployment's node order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FailureConfiguration(pub Vec<NodeStatus>);

impl FailureConfiguration {
    pub fn all_correct(n: usize) -> Self {
        FailureConfiguration(vec![NodeStatus::Correct; n])
    }

    pub fn statuses(&self) -> &[NodeStatus] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn counts(&self) -> CountVector {
        let mut c = CountVector::default();
        for s in &self.0 {
            match s {
                NodeStatus::Correct => c.correct += 1,
                NodeStatus::Crashed => c.crashed += 1,
                NodeStatus::Byzantine => c.byz += 1,
            }
        }
        c
    }

    /// Parses a compact form such as `"CCXB"`.
    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(NodeStatus::from_symbol)
            .collect::<Option<Vec<_>>>()
            .map(FailureConfiguration)
    }
}

impl fmt::Display for FailureConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|s| write!(f, "{}", s.symbol()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Classification {
    pub safe: bool,
    pub live: bool,
}

fn signed(x: usize) -> i64 {
    x as i64
}

/// PBFT safety: both non-equivocation quorums and persistence/view-change
/// quorums must intersect in a non-Byzantine node.
pub fn pbft_safe(c: &CountVector, q: &PbftQuorums) -> bool {
    let n = signed(q.n);
    let byz = signed(c.byz);
    byz < 2 * signed(q.q_eq) - n && byz < signed(q.q_per) + signed(q.q_vc) - n
}

/// PBFT liveness under the quorums' [`LivenessReading`].
pub fn pbft_live(c: &CountVector, q: &PbftQuorums) -> bool {
    let byz = signed(c.byz);
    let vc_bound = match q.reading {
        LivenessReading::Corrected => signed(q.q_vc) - signed(q.q_vc_t),
        LivenessReading::Literal => signed(q.q_vc_t) - signed(q.q_vc),
    };
    byz <= vc_bound && c.correct >= q.q_eq.max(q.q_per).max(q.q_vc) && c.byz < q.q_vc_t
}

/// Raft safety does not depend on the failure configuration.
pub fn raft_safe_structural(q: &RaftQuorums) -> bool {
    q.n < q.q_per + q.q_vc && q.n < 2 * q.q_vc
}

pub fn raft_live(c: &CountVector, q: &RaftQuorums) -> bool {
    c.correct >= q.q_per.max(q.q_vc)
}

/// Applies the protocol's predicates to a count summary.
///
/// Callers guarantee `c.byz == 0` for Raft; see [`classify`] for the
/// checked entry point.
pub fn classify_counts(c: &CountVector, q: &QuorumSpec) -> Classification {
    match q {
        QuorumSpec::Raft(r) => Classification { safe: raft_safe_structural(r), live: raft_live(c, r) },
        QuorumSpec::Pbft(p) => Classification { safe: pbft_safe(c, p), live: pbft_live(c, p) },
    }
}

pub fn classify(cfg: &FailureConfiguration, q: &QuorumSpec) -> Result<Classification, PredicateError> {
    if cfg.len() != q.n() {
        return Err(PredicateError::LengthMismatch { len: cfg.len(), n: q.n() });
    }
    if q.protocol() == ProtocolKind::Raft {
        if let Some(index) = cfg.0.iter().position(|s| *s == NodeStatus::Byzantine) {
            return Err(PredicateError::ByzantineInRaft { index });
        }
    }
    Ok(classify_counts(&cfg.counts(), q))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pbft(n: usize, e: usize, p: usize, v: usize, t: usize) -> PbftQuorums {
        match QuorumSpec::pbft(n, e, p, v, t).unwrap() {
            QuorumSpec::Pbft(q) => q,
            _ => unreachable!(),
        }
    }

    fn raft(n: usize, p: usize, v: usize) -> RaftQuorums {
        match QuorumSpec::raft(n, p, v).unwrap() {
            QuorumSpec::Raft(q) => q,
            _ => unreachable!(),
        }
    }

    #[test]
    fn pbft_safety_examples() {
        let q4 = pbft(4, 3, 3, 3, 2);
        assert!(pbft_safe(&CountVector::new(3, 0, 1), &q4));
        assert!(!pbft_safe(&CountVector::new(2, 0, 2), &q4));
        let q5 = pbft(5, 4, 4, 4, 2);
        assert!(pbft_safe(&CountVector::new(3, 0, 2), &q5));
        assert!(!pbft_safe(&CountVector::new(2, 0, 3), &q5));
    }

    #[test]
    fn pbft_liveness_examples() {
        let q4 = pbft(4, 3, 3, 3, 2);
        assert!(pbft_live(&CountVector::new(3, 0, 1), &q4));
        assert!(!pbft_live(&CountVector::new(2, 0, 2), &q4));
        let q5 = pbft(5, 4, 4, 4, 2);
        assert!(pbft_live(&CountVector::new(4, 1, 0), &q5));
        assert!(!pbft_live(&CountVector::new(3, 1, 1), &q5));
    }

    #[test]
    fn literal_reading_kills_liveness_on_standard_quorums() {
        let q4 = PbftQuorums { reading: LivenessReading::Literal, ..pbft(4, 3, 3, 3, 2) };
        // q_vc_t - q_vc = -1, so even the failure-free configuration is unlive.
        assert!(!pbft_live(&CountVector::new(4, 0, 0), &q4));
    }

    #[test]
    fn crashes_do_not_hurt_pbft_safety() {
        let q = pbft(4, 3, 3, 3, 2);
        assert!(pbft_safe(&CountVector::new(0, 4, 0), &q));
        assert!(!pbft_live(&CountVector::new(2, 2, 0), &q));
    }

    #[test]
    fn raft_structural_examples() {
        assert!(raft_safe_structural(&raft(3, 2, 2)));
        assert!(!raft_safe_structural(&raft(4, 2, 2)));
        assert!(raft_safe_structural(&raft(5, 3, 3)));
        // persistence/view-change intersection alone is not enough
        assert!(!raft_safe_structural(&raft(4, 4, 2)));
        assert!(!raft_safe_structural(&raft(4, 1, 3)));
    }

    #[test]
    fn raft_liveness_examples() {
        let q3 = raft(3, 2, 2);
        assert!(raft_live(&CountVector::new(2, 1, 0), &q3));
        assert!(!raft_live(&CountVector::new(1, 2, 0), &q3));
        assert!(raft_live(&CountVector::new(5, 4, 0), &raft(9, 5, 5)));
    }

    #[test]
    fn classify_examples() {
        use NodeStatus::*;
        let r3 = QuorumSpec::raft(3, 2, 2).unwrap();
        let cfg = FailureConfiguration(vec![Correct, Crashed, Correct]);
        assert_eq!(classify(&cfg, &r3).unwrap(), Classification { safe: true, live: true });
        let cfg = FailureConfiguration(vec![Crashed, Crashed, Correct]);
        assert_eq!(classify(&cfg, &r3).unwrap(), Classification { safe: true, live: false });
        let p4 = QuorumSpec::pbft(4, 3, 3, 3, 2).unwrap();
        let cfg = FailureConfiguration(vec![Byzantine, Byzantine, Correct, Correct]);
        assert_eq!(classify(&cfg, &p4).unwrap(), Classification { safe: false, live: false });
    }

    #[test]
    fn classify_errors() {
        use NodeStatus::*;
        let r3 = QuorumSpec::raft(3, 2, 2).unwrap();
        assert_eq!(
            classify(&FailureConfiguration(vec![Correct, Byzantine, Correct]), &r3),
            Err(PredicateError::ByzantineInRaft { index: 1 })
        );
        assert_eq!(
            classify(&FailureConfiguration::all_correct(2), &r3),
            Err(PredicateError::LengthMismatch { len: 2, n: 3 })
        );
    }

    #[test]
    fn quorum_bounds() {
        assert_eq!(QuorumSpec::raft(3, 0, 2), Err(PredicateError::QuorumSize { name: "q_per", size: 0, n: 3 }));
        assert!(QuorumSpec::pbft(4, 3, 3, 3, 5).is_err());
        assert_eq!(QuorumSpec::raft(0, 1, 1), Err(PredicateError::NoNodes));
    }

    #[test]
    fn config_parse_roundtrip() {
        let cfg = FailureConfiguration::parse("CCXB").unwrap();
        assert_eq!(cfg.to_string(), "CCXB");
        assert_eq!(cfg.counts(), CountVector::new(2, 1, 1));
        assert!(FailureConfiguration::parse("CQ").is_none());
    }
}
