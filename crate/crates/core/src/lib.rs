//! Probabilistic safety and liveness analysis for quorum-based consensus.
//!
//! Nodes fail independently with per-node crash and Byzantine
//! probabilities. Given quorum sizes for Raft or PBFT, this crate computes
//! the exact probability that a deployment is safe, live, or both;
//! cross-checks those numbers by seeded sampling; builds concrete violating
//! runs for unsafe or unlive failure configurations; and searches for the
//! cheapest deployment that meets a reliability target.

pub mod exact;
pub mod fault_model;
pub mod montecarlo;
mod numeric;
pub mod optimizer;
pub mod predicates;
pub mod report;
pub mod witness;

pub use exact::{analyze_dp, enumerate_exact, AnalysisError};
pub use fault_model::{Deployment, FaultCurve, FaultProfile, Node, ProtocolKind};
pub use optimizer::{
    optimize_deployment, sweep_table, tradeoff_frontier, NodeClass, OptimizeOutcome, QuorumRule, ReliabilityTarget,
};
pub use predicates::{
    classify, Classification, CountVector, FailureConfiguration, LivenessReading, NodeStatus, QuorumSpec,
};
pub use report::{Method, ReliabilityReport};
pub use witness::{check_witness, find_liveness_witness, find_safety_witness, ViolationWitness};
