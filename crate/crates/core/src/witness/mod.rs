//! Concrete violating runs of the abstract three-phase protocol.
//!
//! A witness pairs a failure configuration with a scripted trace of
//! protocol events. [`find_safety_witness`] and [`find_liveness_witness`]
//! build traces; [`check_witness`] replays a trace against the protocol
//! rules without reusing any of the construction code.
//!
//! Model conventions:
//! - Crashed nodes follow the protocol until their `Crash` event.
//! - "Honest" means not Byzantine; agreement is required among honest
//!   commits.
//! - PBFT view `v` is led by node `v mod n`. Raft leaders are whoever
//!   collects a view-change quorum.
//! - A new leader's proposal for a slot must be one of the values persisted
//!   in the highest view reported by the honest members of its view-change
//!   quorum.

mod check;
mod construct;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::predicates::{FailureConfiguration, QuorumSpec};

pub use check::check_witness;
pub use construct::{find_liveness_witness, find_safety_witness};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Propose,
    Equivoke,
    Vote,
    Persist,
    Commit,
    ViewChangeRequest,
    ViewChangeComplete,
    Crash,
    Stall,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Propose => "propose",
            EventKind::Equivoke => "equivoke",
            EventKind::Vote => "vote",
            EventKind::Persist => "persist",
            EventKind::Commit => "commit",
            EventKind::ViewChangeRequest => "view_change_request",
            EventKind::ViewChangeComplete => "view_change_complete",
            EventKind::Crash => "crash",
            EventKind::Stall => "stall",
        }
    }
}

/// One step of a run. `target` names the candidate of a view-change request.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolEvent {
    pub step: usize,
    pub actor: usize,
    pub kind: EventKind,
    pub view: u64,
    pub slot: u64,
    pub value: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
}

impl fmt::Display for ProtocolEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>4}  n{:<3} {:<21}", self.step, self.actor, self.kind.name())?;
        match self.kind {
            EventKind::Crash | EventKind::Stall => Ok(()),
            EventKind::ViewChangeRequest => {
                write!(f, " view={}", self.view)?;
                if let Some(t) = self.target {
                    write!(f, " -> n{t}")?;
                }
                Ok(())
            }
            EventKind::ViewChangeComplete => write!(f, " view={}", self.view),
            _ => write!(f, " view={} slot={} value={}", self.view, self.slot, self.value),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    SplitBrain,
    LostCommit,
    Equivocation,
    Stall,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::SplitBrain => "SplitBrain",
            ViolationKind::LostCommit => "LostCommit",
            ViolationKind::Equivocation => "Equivocation",
            ViolationKind::Stall => "Stall",
        };
        f.write_str(s)
    }
}

/// Counting argument attached to a `Stall` witness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StallProof {
    /// Fewer live honest nodes than the largest quorum needed for progress.
    QuorumUnavailable { required: usize, available: usize },
    /// Byzantine nodes alone reach the view-change trigger and can force
    /// view changes indefinitely.
    SpuriousViewChanges { view: u64, byzantine: usize, trigger: usize },
    /// A leader elected with too few honest requests; once its Byzantine
    /// supporters go silent the honest nodes can never reach the trigger
    /// to replace it.
    ViewChangeStarved { view: u64, honest_requests: usize, trigger: usize },
}

impl fmt::Display for StallProof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StallProof::QuorumUnavailable { required, available } => {
                write!(f, "only {available} live honest nodes, a progress quorum needs {required}")
            }
            StallProof::SpuriousViewChanges { view, byzantine, trigger } => {
                write!(f, "{byzantine} Byzantine requests for view {view} reach the trigger of {trigger}")
            }
            StallProof::ViewChangeStarved { view, honest_requests, trigger } => write!(
                f,
                "leader of view {view} holds {honest_requests} honest requests, below the trigger of {trigger}"
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationWitness {
    pub configuration: FailureConfiguration,
    pub quorums: QuorumSpec,
    pub trace: Vec<ProtocolEvent>,
    pub violation_kind: ViolationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stall: Option<StallProof>,
}

impl ViolationWitness {
    /// Line-oriented rendering of the trace.
    pub fn render_trace(&self) -> String {
        let mut out =
            format!("{} witness, configuration {}, {}\n", self.violation_kind, self.configuration, self.quorums);
        for e in &self.trace {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        if let Some(proof) = &self.stall {
            out.push_str(&format!("stalled: {proof}\n"));
        }
        out
    }
}
