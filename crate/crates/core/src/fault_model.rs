//! Node fault profiles, piecewise-constant fault curves, and deployments.
//!
//! A [`FaultProfile`] is the per-epoch probability that a node crashes or
//! turns Byzantine. Every analysis in this crate works on one epoch's scalar
//! profiles; a [`FaultCurve`] only selects which profile is active at a time.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Consensus protocol family a deployment is analyzed under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    /// Crash fault tolerant; no Byzantine guarantees.
    Raft,
    /// Byzantine fault tolerant.
    Pbft,
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolKind::Raft => f.write_str("raft"),
            ProtocolKind::Pbft => f.write_str("pbft"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FaultModelError {
    #[error("invalid fault profile (p_crash={p_crash}, p_byz={p_byz}): {reason}")]
    Profile { p_crash: f64, p_byz: f64, reason: &'static str },
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("fault curve must have at least one segment")]
    EmptyCurve,
    #[error("fault curve must start at time 0, first segment starts at {0}")]
    CurveStart(f64),
    #[error("fault curve segment start times must be strictly increasing (segment {index})")]
    CurveOrder { index: usize },
}

/// Per-epoch failure probabilities of a single node.
///
/// The probability of staying correct is derived, never stored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaultProfile {
    pub p_crash: f64,
    pub p_byz: f64,
}

impl FaultProfile {
    /// Checked constructor.
    pub fn new(p_crash: f64, p_byz: f64) -> Result<Self, FaultModelError> {
        let profile = FaultProfile { p_crash, p_byz };
        profile.check()?;
        Ok(profile)
    }

    /// A node that can only crash.
    pub fn crash(p: f64) -> Result<Self, FaultModelError> {
        Self::new(p, 0.0)
    }

    /// A node whose every failure is Byzantine.
    pub fn byzantine(p: f64) -> Result<Self, FaultModelError> {
        Self::new(0.0, p)
    }

    pub fn p_correct(&self) -> f64 {
        // Clamped so that rounding in `1 - a - b` never yields a tiny negative.
        (1.0 - self.p_crash - self.p_byz).max(0.0)
    }

    /// Probability that the node fails in any way.
    pub fn p_fail(&self) -> f64 {
        (self.p_crash + self.p_byz).min(1.0)
    }

    pub fn check(&self) -> Result<(), FaultModelError> {
        let err = |reason| FaultModelError::Profile { p_crash: self.p_crash, p_byz: self.p_byz, reason };
        if !self.p_crash.is_finite() || !self.p_byz.is_finite() {
            return Err(err("probabilities must be finite"));
        }
        if self.p_crash < 0.0 || self.p_byz < 0.0 {
            return Err(err("probabilities must be non-negative"));
        }
        if self.p_crash + self.p_byz > 1.0 {
            return Err(err("p_crash + p_byz exceeds 1"));
        }
        Ok(())
    }
}

/// Time-varying fault profile, constant between segment start times (hours).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaultCurve {
    segments: Vec<(f64, FaultProfile)>,
}

impl FaultCurve {
    pub fn new(segments: Vec<(f64, FaultProfile)>) -> Result<Self, FaultModelError> {
        let Some(&(first, _)) = segments.first() else {
            return Err(FaultModelError::EmptyCurve);
        };
        if first != 0.0 {
            return Err(FaultModelError::CurveStart(first));
        }
        for (index, pair) in segments.windows(2).enumerate() {
            if pair[1].0.partial_cmp(&pair[0].0) != Some(std::cmp::Ordering::Greater) {
                return Err(FaultModelError::CurveOrder { index: index + 1 });
            }
        }
        for (_, profile) in &segments {
            profile.check()?;
        }
        Ok(FaultCurve { segments })
    }

    /// A curve with one segment covering all time.
    pub fn constant(profile: FaultProfile) -> Self {
        FaultCurve { segments: vec![(0.0, profile)] }
    }

    pub fn segments(&self) -> &[(f64, FaultProfile)] {
        &self.segments
    }
}

/// Profile of the segment active at time `t` (hours).
///
/// Right-continuous: at a segment boundary the new segment's profile applies.
pub fn epoch_probability(curve: &FaultCurve, t: f64) -> Result<FaultProfile, FaultModelError> {
    if t.is_nan() || t < 0.0 {
        return Err(FaultModelError::NegativeTime(t));
    }
    // Segments are sorted, so the active one is the last with start <= t.
    let idx = curve.segments.partition_point(|(start, _)| *start <= t);
    Ok(curve.segments[idx - 1].1)
}

/// One machine in a deployment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub profile: FaultProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    /// Per-epoch cost; only totals are ever compared.
    #[serde(default)]
    pub cost: f64,
}

impl Node {
    pub fn new(id: impl Into<String>, profile: FaultProfile) -> Self {
        Node { id: id.into(), profile, class: None, cost: 0.0 }
    }

    pub fn with_class(mut self, class: impl Into<String>) -> Self {
        self.class = Some(class.into());
        self
    }

    pub fn with_cost(mut self, cost: f64) -> Self {
        self.cost = cost;
        self
    }
}

/// Ordered set of nodes. Reports refer to nodes by their index in this order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    nodes: Vec<Node>,
}

impl Deployment {
    /// Builds a deployment without validating it; see [`validate_deployment`].
    pub fn new(nodes: Vec<Node>) -> Self {
        Deployment { nodes }
    }

    /// `n` nodes named `n0..` sharing one profile.
    pub fn homogeneous(n: usize, profile: FaultProfile) -> Self {
        Self::from_profiles(std::iter::repeat_n(profile, n))
    }

    /// Nodes named `n0..` with the given profiles, in order.
    pub fn from_profiles(profiles: impl IntoIterator<Item = FaultProfile>) -> Self {
        let nodes = profiles.into_iter().enumerate().map(|(i, p)| Node::new(format!("n{i}"), p)).collect();
        Deployment { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn profiles(&self) -> impl Iterator<Item = FaultProfile> + '_ {
        self.nodes.iter().map(|n| n.profile)
    }

    pub fn total_cost(&self) -> f64 {
        self.nodes.iter().map(|n| n.cost).sum()
    }

    /// Index of the node with the given id.
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("deployment has no nodes")]
    Empty,
    #[error("node {id}: {source}")]
    Profile {
        id: String,
        #[source]
        source: FaultModelError,
    },
    #[error("duplicate node id {id}")]
    DuplicateId { id: String },
    #[error("node {id}: cost must be finite and non-negative, got {cost}")]
    Cost { id: String, cost: f64 },
    #[error("node {id}: p_byz={p_byz} but raft offers no Byzantine guarantees")]
    ModelMismatch { id: String, p_byz: f64 },
}

/// Coarse classification of a [`ValidationError`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValidationErrorKind {
    Empty,
    Profile,
    Identity,
    Cost,
    ModelMismatch,
}

impl ValidationError {
    pub fn kind(&self) -> ValidationErrorKind {
        match self {
            ValidationError::Empty => ValidationErrorKind::Empty,
            ValidationError::Profile { .. } => ValidationErrorKind::Profile,
            ValidationError::DuplicateId { .. } => ValidationErrorKind::Identity,
            ValidationError::Cost { .. } => ValidationErrorKind::Cost,
            ValidationError::ModelMismatch { .. } => ValidationErrorKind::ModelMismatch,
        }
    }
}

/// Collects every invariant violation of `deployment` under `protocol`.
///
/// Raft deployments with any non-zero `p_byz` are rejected rather than
/// folding Byzantine risk into crash risk.
pub fn validate_deployment(deployment: &Deployment, protocol: ProtocolKind) -> Result<(), Vec<ValidationError>> {
    let mut errors = Vec::new();
    if deployment.is_empty() {
        errors.push(ValidationError::Empty);
    }
    let mut seen = HashSet::new();
    let mut duplicates = BTreeSet::new();
    for node in deployment.nodes() {
        if let Err(source) = node.profile.check() {
            errors.push(ValidationError::Profile { id: node.id.clone(), source });
        }
        if !seen.insert(node.id.as_str()) {
            duplicates.insert(node.id.clone());
        }
        if !node.cost.is_finite() || node.cost < 0.0 {
            errors.push(ValidationError::Cost { id: node.id.clone(), cost: node.cost });
        }
        if protocol == ProtocolKind::Raft && node.profile.p_byz != 0.0 {
            errors.push(ValidationError::ModelMismatch { id: node.id.clone(), p_byz: node.profile.p_byz });
        }
    }
    errors.extend(duplicates.into_iter().map(|id| ValidationError::DuplicateId { id }));
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: f64, b: f64) -> FaultProfile {
        FaultProfile::new(c, b).unwrap()
    }

    #[test]
    fn single_segment_curve() {
        let curve = FaultCurve::constant(p(0.01, 0.0));
        assert_eq!(epoch_probability(&curve, 5.0).unwrap(), p(0.01, 0.0));
    }

    #[test]
    fn bathtub_middle_segment() {
        let curve = FaultCurve::new(vec![(0.0, p(0.04, 0.0)), (720.0, p(0.01, 0.0)), (17520.0, p(0.04, 0.0))]).unwrap();
        assert_eq!(epoch_probability(&curve, 1000.0).unwrap(), p(0.01, 0.0));
        assert_eq!(epoch_probability(&curve, 0.0).unwrap(), p(0.04, 0.0));
        assert_eq!(epoch_probability(&curve, 719.999).unwrap(), p(0.04, 0.0));
        // right-continuous at boundaries
        assert_eq!(epoch_probability(&curve, 720.0).unwrap(), p(0.01, 0.0));
        assert_eq!(epoch_probability(&curve, 17520.0).unwrap(), p(0.04, 0.0));
        assert_eq!(epoch_probability(&curve, 1e9).unwrap(), p(0.04, 0.0));
    }

    #[test]
    fn negative_time_rejected() {
        let curve = FaultCurve::constant(p(0.01, 0.0));
        assert_eq!(epoch_probability(&curve, -1.0), Err(FaultModelError::NegativeTime(-1.0)));
    }

    #[test]
    fn malformed_curves() {
        assert_eq!(FaultCurve::new(vec![]), Err(FaultModelError::EmptyCurve));
        assert_eq!(FaultCurve::new(vec![(1.0, p(0.1, 0.0))]), Err(FaultModelError::CurveStart(1.0)));
        assert_eq!(
            FaultCurve::new(vec![(0.0, p(0.1, 0.0)), (0.0, p(0.2, 0.0))]),
            Err(FaultModelError::CurveOrder { index: 1 })
        );
    }

    #[test]
    fn profile_bounds() {
        assert!(FaultProfile::new(0.5, 0.6).is_err());
        assert!(FaultProfile::new(-0.1, 0.0).is_err());
        assert!(FaultProfile::new(f64::NAN, 0.0).is_err());
        assert!(FaultProfile::new(0.5, 0.5).is_ok());
        assert_eq!(p(0.04, 0.0001).p_fail(), 0.04 + 0.0001);
    }

    #[test]
    fn raft_ok() {
        let d = Deployment::homogeneous(3, p(0.01, 0.0));
        assert!(validate_deployment(&d, ProtocolKind::Raft).is_ok());
    }

    #[test]
    fn invalid_profile_reported() {
        let d = Deployment::from_profiles([FaultProfile { p_crash: 0.5, p_byz: 0.6 }]);
        let errs = validate_deployment(&d, ProtocolKind::Pbft).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].kind(), ValidationErrorKind::Profile);
    }

    #[test]
    fn raft_rejects_byzantine() {
        let d = Deployment::from_profiles([p(0.04, 0.0001)]);
        let errs = validate_deployment(&d, ProtocolKind::Raft).unwrap_err();
        assert_eq!(errs[0].kind(), ValidationErrorKind::ModelMismatch);
        assert!(validate_deployment(&d, ProtocolKind::Pbft).is_ok());
    }

    #[test]
    fn duplicates_and_costs() {
        let d = Deployment::new(vec![Node::new("a", p(0.1, 0.0)), Node::new("a", p(0.1, 0.0)).with_cost(-1.0)]);
        let mut kinds: Vec<_> =
            validate_deployment(&d, ProtocolKind::Raft).unwrap_err().iter().map(ValidationError::kind).collect();
        kinds.sort();
        assert_eq!(kinds, vec![ValidationErrorKind::Identity, ValidationErrorKind::Cost]);
        assert_eq!(
            validate_deployment(&Deployment::new(vec![]), ProtocolKind::Raft).unwrap_err(),
            vec![ValidationError::Empty]
        );
    }
}
