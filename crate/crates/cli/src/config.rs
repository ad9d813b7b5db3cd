//! Deployment spec files.
//!
//! ```json
//! {
//!   "protocol": "pbft",
//!   "nodes": [
//!     {"id": "a", "p_crash": 0.0, "p_byz": 0.01, "count": 4}
//!   ],
//!   "quorums": {"q_eq": 3, "q_per": 3, "q_vc": 3, "q_vc_t": 2}
//! }
//! ```
//!
//! A node with `count` expands to ids `a0`, `a1`, ... A node may give a
//! piecewise `curve` instead of fixed probabilities; it is evaluated at the
//! top-level `at_hours` (default 0). Without `quorums`, raft uses majority
//! quorums and pbft the `n - f` / `f + 1` threshold rule.

use std::fs;
use std::path::Path;

use quorum_risk::fault_model::{
    epoch_probability, validate_deployment, Deployment, FaultCurve, FaultProfile, Node, ProtocolKind, ValidationError,
};
use quorum_risk::optimizer::{NodeClass, QuorumRule};
use quorum_risk::predicates::{PredicateError, QuorumSpec};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{}{message}", field_prefix(.field))]
    Parse { field: String, message: String },
    #[error("unsupported protocol {0:?}, expected raft or pbft")]
    UnsupportedProtocol(String),
    #[error("{field}: {message}")]
    Schema { field: String, message: String },
    #[error("invalid deployment: {}", join(.0))]
    Validation(Vec<ValidationError>),
}

fn field_prefix(field: &str) -> String {
    if field.is_empty() || field == "." {
        String::new()
    } else {
        format!("{field}: ")
    }
}

fn join(errors: &[ValidationError]) -> String {
    errors.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")
}

impl ConfigError {
    pub fn kind(&self) -> &'static str {
        match self {
            ConfigError::Io { .. } => "io",
            ConfigError::Parse { .. } => "parse",
            ConfigError::UnsupportedProtocol(_) => "unsupported_protocol",
            ConfigError::Schema { .. } => "schema",
            ConfigError::Validation(_) => "validation",
        }
    }

    /// Dotted path of the offending field, when there is one.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Parse { field, .. } | ConfigError::Schema { field, .. } => {
                (!field.is_empty() && field != ".").then_some(field.as_str())
            }
            ConfigError::UnsupportedProtocol(_) => Some("protocol"),
            _ => None,
        }
    }

    fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Schema { field: field.into(), message: message.into() }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    protocol: String,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    at_hours: Option<f64>,
    nodes: Vec<NodeEntry>,
    #[serde(default)]
    quorums: Option<QuorumEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeEntry {
    id: String,
    #[serde(default)]
    p_crash: Option<f64>,
    #[serde(default)]
    p_byz: Option<f64>,
    #[serde(default)]
    curve: Option<Vec<CurveSegment>>,
    #[serde(default)]
    class: Option<String>,
    #[serde(default)]
    cost: Option<f64>,
    #[serde(default)]
    count: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveSegment {
    start: f64,
    #[serde(default)]
    p_crash: f64,
    #[serde(default)]
    p_byz: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuorumEntry {
    #[serde(default)]
    q_eq: Option<usize>,
    q_per: usize,
    q_vc: usize,
    #[serde(default)]
    q_vc_t: Option<usize>,
}

/// A validated spec file.
#[derive(Clone, Debug)]
pub struct Spec {
    pub protocol: ProtocolKind,
    pub description: Option<String>,
    pub deployment: Deployment,
    pub quorums: QuorumSpec,
}

impl Spec {
    /// One class per distinct class label, in order of first appearance.
    pub fn node_classes(&self) -> Result<Vec<NodeClass>, ConfigError> {
        let mut classes: Vec<NodeClass> = Vec::new();
        for (i, node) in self.deployment.nodes().iter().enumerate() {
            let Some(label) = &node.class else {
                return Err(ConfigError::schema(
                    format!("nodes[{i}].class"),
                    format!("node {} needs a class label for optimization", node.id),
                ));
            };
            match classes.iter().find(|c| &c.label == label) {
                Some(c) if c.profile != node.profile || c.unit_cost != node.cost => {
                    return Err(ConfigError::schema(
                        format!("nodes[{i}]"),
                        format!("node {} differs from earlier members of class {label}", node.id),
                    ));
                }
                Some(_) => {}
                None => classes.push(NodeClass::new(label.clone(), node.profile, node.cost)),
            }
        }
        Ok(classes)
    }
}

pub fn default_rule(protocol: ProtocolKind) -> QuorumRule {
    match protocol {
        ProtocolKind::Raft => QuorumRule::Majority,
        ProtocolKind::Pbft => QuorumRule::ByzantineThreshold,
    }
}

pub fn parse_protocol(name: &str) -> Result<ProtocolKind, ConfigError> {
    match name {
        "raft" => Ok(ProtocolKind::Raft),
        "pbft" => Ok(ProtocolKind::Pbft),
        other => Err(ConfigError::UnsupportedProtocol(other.to_string())),
    }
}

/// Reads, parses and validates a spec file.
pub fn parse_config(path: &Path) -> Result<Spec, ConfigError> {
    let text =
        fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_spec(&text)
}

pub fn parse_spec(text: &str) -> Result<Spec, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: SpecFile = serde_path_to_error::deserialize(de)
        .map_err(|e| ConfigError::Parse { field: e.path().to_string(), message: e.inner().to_string() })?;
    let protocol = parse_protocol(&file.protocol)?;
    let at = file.at_hours.unwrap_or(0.0);

    let mut nodes = Vec::new();
    for (i, entry) in file.nodes.iter().enumerate() {
        let profile = node_profile(i, entry, at)?;
        let copies = match entry.count {
            None => None,
            Some(0) => return Err(ConfigError::schema(format!("nodes[{i}].count"), "must be at least 1")),
            Some(k) => Some(k),
        };
        let ids: Vec<String> = match copies {
            None => vec![entry.id.clone()],
            Some(k) => (0..k).map(|j| format!("{}{j}", entry.id)).collect(),
        };
        for id in ids {
            let mut node = Node::new(id, profile).with_cost(entry.cost.unwrap_or(0.0));
            if let Some(c) = &entry.class {
                node = node.with_class(c.clone());
            }
            nodes.push(node);
        }
    }
    let deployment = Deployment::new(nodes);
    validate_deployment(&deployment, protocol).map_err(ConfigError::Validation)?;

    let quorums = quorums(protocol, deployment.len(), file.quorums.as_ref())?;
    Ok(Spec { protocol, description: file.description, deployment, quorums })
}

fn node_profile(i: usize, entry: &NodeEntry, at: f64) -> Result<FaultProfile, ConfigError> {
    match &entry.curve {
        None => Ok(FaultProfile { p_crash: entry.p_crash.unwrap_or(0.0), p_byz: entry.p_byz.unwrap_or(0.0) }),
        Some(_) if entry.p_crash.is_some() || entry.p_byz.is_some() => Err(ConfigError::schema(
            format!("nodes[{i}].curve"),
            "give either a curve or fixed probabilities, not both",
        )),
        Some(segments) => {
            let curve = FaultCurve::new(
                segments.iter().map(|s| (s.start, FaultProfile { p_crash: s.p_crash, p_byz: s.p_byz })).collect(),
            )
            .map_err(|e| ConfigError::schema(format!("nodes[{i}].curve"), e.to_string()))?;
            epoch_probability(&curve, at).map_err(|e| ConfigError::schema("at_hours", e.to_string()))
        }
    }
}

fn quorums(protocol: ProtocolKind, n: usize, entry: Option<&QuorumEntry>) -> Result<QuorumSpec, ConfigError> {
    let Some(q) = entry else {
        return default_rule(protocol).quorums(protocol, n).map_err(|e| ConfigError::schema("quorums", e.to_string()));
    };
    let size_error = |e: PredicateError| match e {
        PredicateError::QuorumSize { name, .. } => ConfigError::schema(format!("quorums.{name}"), e.to_string()),
        other => ConfigError::schema("quorums", other.to_string()),
    };
    match protocol {
        ProtocolKind::Raft => {
            for (name, v) in [("q_eq", q.q_eq), ("q_vc_t", q.q_vc_t)] {
                if v.is_some() {
                    return Err(ConfigError::schema(format!("quorums.{name}"), "not used by raft"));
                }
            }
            QuorumSpec::raft(n, q.q_per, q.q_vc).map_err(size_error)
        }
        ProtocolKind::Pbft => {
            let q_eq = q.q_eq.ok_or_else(|| ConfigError::schema("quorums.q_eq", "required for pbft"))?;
            let q_vc_t = q.q_vc_t.ok_or_else(|| ConfigError::schema("quorums.q_vc_t", "required for pbft"))?;
            QuorumSpec::pbft(n, q_eq, q.q_per, q.q_vc, q_vc_t).map_err(size_error)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_node_raft() {
        let s = parse_spec(
            r#"{"protocol":"raft","nodes":[{"id":"n","p_crash":0.01,"count":3}],"quorums":{"q_per":2,"q_vc":2}}"#,
        )
        .unwrap();
        assert_eq!(s.deployment.len(), 3);
        assert_eq!(s.quorums, QuorumSpec::raft(3, 2, 2).unwrap());
        assert_eq!(s.deployment.nodes()[2].id, "n2");
    }

    #[test]
    fn unsupported_protocol() {
        let e = parse_spec(r#"{"protocol":"zab","nodes":[{"id":"a"}]}"#).unwrap_err();
        assert_eq!(e.kind(), "unsupported_protocol");
    }

    #[test]
    fn zero_quorum_names_field() {
        let e = parse_spec(r#"{"protocol":"raft","nodes":[{"id":"a"}],"quorums":{"q_per":0,"q_vc":1}}"#).unwrap_err();
        assert_eq!(e.field(), Some("quorums.q_per"));
    }

    #[test]
    fn type_errors_carry_paths() {
        let e = parse_spec(r#"{"protocol":"raft","nodes":[{"id":"a","p_crash":"x"}]}"#).unwrap_err();
        assert_eq!(e.field(), Some("nodes[0].p_crash"));
        let e = parse_spec(r#"{"protocol":"raft","nodes":[{"id":"a","colour":1}]}"#).unwrap_err();
        assert_eq!(e.kind(), "parse");
    }

    #[test]
    fn pbft_needs_trigger_quorum() {
        let e =
            parse_spec(r#"{"protocol":"pbft","nodes":[{"id":"a","count":4}],"quorums":{"q_eq":3,"q_per":3,"q_vc":3}}"#)
                .unwrap_err();
        assert_eq!((e.kind(), e.field()), ("schema", Some("quorums.q_vc_t")));
    }

    #[test]
    fn raft_rejects_byzantine_nodes() {
        let e = parse_spec(r#"{"protocol":"raft","nodes":[{"id":"m1","p_crash":0.04,"p_byz":0.0001}]}"#).unwrap_err();
        assert_eq!(e.kind(), "validation");
        assert!(e.to_string().contains("m1"), "{e}");
    }

    #[test]
    fn curves_and_defaults() {
        let s = parse_spec(
            r#"{"protocol":"pbft","at_hours":1000,"nodes":[{"id":"a","count":4,"curve":[
                {"start":0,"p_byz":0.04},{"start":720,"p_byz":0.01},{"start":17520,"p_byz":0.04}]}]}"#,
        )
        .unwrap();
        assert_eq!(s.deployment.nodes()[0].profile.p_byz, 0.01);
        assert_eq!(s.quorums, QuorumSpec::pbft(4, 3, 3, 3, 2).unwrap());
    }

    #[test]
    fn classes_from_labels() {
        let s = parse_spec(
            r#"{"protocol":"raft","nodes":[
                {"id":"a","class":"A","p_crash":0.01,"cost":10},
                {"id":"b","class":"B","p_crash":0.08,"cost":1,"count":2}]}"#,
        )
        .unwrap();
        let c = s.node_classes().unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!((c[1].label.as_str(), c[1].unit_cost), ("B", 1.0));
    }
}
