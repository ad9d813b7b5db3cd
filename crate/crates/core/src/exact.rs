//! Exact safety and liveness probabilities.
//!
//! Two independent routes compute the same numbers:
//!
//! - [`enumerate_exact`] walks every failure configuration (2^N for Raft,
//!   3^N for PBFT) and sums the probabilities of the safe/live ones. It is
//!   the ground truth, and it is only practical for small N.
//! - [`analyze_dp`] convolves per-node profiles into the joint distribution
//!   of (crashed, Byzantine) counts and evaluates the count-only predicates
//!   on it, in O(N^3).
//!
//! The module also provides the auxiliary quorum quantities used when
//! comparing adversarial and probabilistic failures.

use std::collections::HashSet;

use thiserror::Error;

use crate::fault_model::{validate_deployment, Deployment, FaultProfile, ProtocolKind, ValidationError};
use crate::numeric::{binomial, for_each_combination, CompensatedSum};
use crate::predicates::{classify_counts, CountVector, PredicateError, QuorumSpec};
use crate::report::{Method, ReliabilityReport};

/// Largest Raft deployment [`enumerate_exact`] accepts by default (2^16 terms).
pub const DEFAULT_RAFT_ENUMERATION_CAP: usize = 16;
/// Largest PBFT deployment [`enumerate_exact`] accepts by default (3^9 terms).
pub const DEFAULT_PBFT_ENUMERATION_CAP: usize = 9;

/// Above this size [`random_quorum_contains_correct`] stops enumerating subsets.
pub const SUBSET_ENUMERATION_LIMIT: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid deployment: {}", join(.0))]
    Invalid(Vec<ValidationError>),
    #[error(transparent)]
    Quorum(#[from] PredicateError),
    #[error("deployment has {deployment} nodes but quorums are for {quorums}")]
    SizeMismatch { deployment: usize, quorums: usize },
    #[error("enumeration of {n} nodes exceeds the cap of {cap}; use the count DP instead")]
    Capacity { n: usize, cap: usize },
    #[error("{0}")]
    Domain(String),
    #[error("quorum constraint: {0}")]
    Constraint(String),
}

fn join(errors: &[ValidationError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub(crate) fn check_inputs(d: &Deployment, q: &QuorumSpec) -> Result<(), AnalysisError> {
    validate_deployment(d, q.protocol()).map_err(AnalysisError::Invalid)?;
    q.check()?;
    if d.len() != q.n() {
        return Err(AnalysisError::SizeMismatch { deployment: d.len(), quorums: q.n() });
    }
    Ok(())
}

/// Profile checks only; Byzantine probabilities are allowed.
fn check_profiles(d: &Deployment) -> Result<(), AnalysisError> {
    validate_deployment(d, ProtocolKind::Pbft).map_err(AnalysisError::Invalid)
}

/// Joint distribution of the number of crashed and Byzantine nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct CountDistribution {
    n: usize,
    // row-major over (crashed, byz), entries with crashed + byz > n stay 0
    pmf: Vec<f64>,
}

impl CountDistribution {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, crashed: usize, byz: usize) -> f64 {
        if crashed + byz > self.n {
            return 0.0;
        }
        self.pmf[crashed * (self.n + 1) + byz]
    }

    /// Support points with their probabilities, crashed-major order.
    pub fn iter(&self) -> impl Iterator<Item = (CountVector, f64)> + '_ {
        let n = self.n;
        (0..=n).flat_map(move |crashed| {
            (0..=n - crashed)
                .map(move |byz| (CountVector::new(n - crashed - byz, crashed, byz), self.get(crashed, byz)))
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.iter().map(|(_, p)| p).collect::<CompensatedSum>().value()
    }

    /// Distribution of the total failure count `crashed + byz`.
    pub fn failure_counts(&self) -> Vec<f64> {
        let mut sums = vec![CompensatedSum::new(); self.n + 1];
        for (c, p) in self.iter() {
            sums[c.crashed + c.byz].add(p);
        }
        sums.iter().map(CompensatedSum::value).collect()
    }
}

/// Exact count distribution by per-node convolution.
pub fn count_distribution(d: &Deployment) -> Result<CountDistribution, AnalysisError> {
    check_profiles(d)?;
    Ok(convolve(d.profiles(), d.len()))
}

fn convolve(profiles: impl Iterator<Item = FaultProfile>, n: usize) -> CountDistribution {
    let w = n + 1;
    let mut pmf = vec![0.0; w * w];
    pmf[0] = 1.0;
    for (seen, profile) in profiles.enumerate() {
        let (pc, pb, pk) = (profile.p_crash, profile.p_byz, profile.p_correct());
        // Walk (crashed, byz) downwards so each cell reads pre-update neighbours.
        for crashed in (0..=seen + 1).rev() {
            for byz in (0..=seen + 1 - crashed).rev() {
                let mut v = pmf[crashed * w + byz] * pk;
                if crashed > 0 {
                    v += pmf[(crashed - 1) * w + byz] * pc;
                }
                if byz > 0 {
                    v += pmf[crashed * w + byz - 1] * pb;
                }
                pmf[crashed * w + byz] = v;
            }
        }
    }
    CountDistribution { n, pmf }
}

/// Safety/liveness probabilities from the count distribution.
pub fn analyze_dp(d: &Deployment, q: &QuorumSpec) -> Result<ReliabilityReport, AnalysisError> {
    check_inputs(d, q)?;
    let dist = convolve(d.profiles(), d.len());
    let mut tally = Tally::default();
    for (counts, p) in dist.iter() {
        tally.add(&counts, p, q);
    }
    Ok(tally.report(Method::CountDp, q))
}

/// Running sums of the safe, live and safe-and-live mass.
#[derive(Default)]
struct Tally {
    sums: [CompensatedSum; 3],
    // set once any positive-mass configuration fails the metric
    missed: [bool; 3],
}

impl Tally {
    fn add(&mut self, counts: &CountVector, p: f64, q: &QuorumSpec) {
        if p == 0.0 {
            return;
        }
        let c = classify_counts(counts, q);
        for (i, holds) in [c.safe, c.live, c.safe && c.live].into_iter().enumerate() {
            if holds {
                self.sums[i].add(p);
            } else {
                self.missed[i] = true;
            }
        }
    }

    /// Metrics that held everywhere come out as exactly 1.
    fn report(&self, method: Method, q: &QuorumSpec) -> ReliabilityReport {
        let v = |i: usize| if self.missed[i] { self.sums[i].value() } else { 1.0 };
        ReliabilityReport::exact(v(0), v(1), v(2), method, *q)
    }
}

pub fn default_enumeration_cap(protocol: ProtocolKind) -> usize {
    match protocol {
        ProtocolKind::Raft => DEFAULT_RAFT_ENUMERATION_CAP,
        ProtocolKind::Pbft => DEFAULT_PBFT_ENUMERATION_CAP,
    }
}

/// Ground-truth probabilities by enumerating every failure configuration.
pub fn enumerate_exact(d: &Deployment, q: &QuorumSpec) -> Result<ReliabilityReport, AnalysisError> {
    enumerate_exact_with_cap(d, q, default_enumeration_cap(q.protocol()))
}

pub fn enumerate_exact_with_cap(
    d: &Deployment,
    q: &QuorumSpec,
    cap: usize,
) -> Result<ReliabilityReport, AnalysisError> {
    check_inputs(d, q)?;
    let n = d.len();
    if n > cap {
        return Err(AnalysisError::Capacity { n, cap });
    }
    // Raft has no Byzantine state; PBFT enumerates all three.
    let states: usize = match q.protocol() {
        ProtocolKind::Raft => 2,
        ProtocolKind::Pbft => 3,
    };
    let profiles: Vec<FaultProfile> = d.profiles().collect();
    let mut tally = Tally::default();
    // digits[i] is node i's status: 0 correct, 1 crashed, 2 Byzantine
    let mut digits = vec![0usize; n];
    loop {
        let mut p = 1.0;
        let mut counts = CountVector::default();
        for (digit, profile) in digits.iter().zip(&profiles) {
            match digit {
                0 => {
                    p *= profile.p_correct();
                    counts.correct += 1;
                }
                1 => {
                    p *= profile.p_crash;
                    counts.crashed += 1;
                }
                _ => {
                    p *= profile.p_byz;
                    counts.byz += 1;
                }
            }
        }
        tally.add(&counts, p, q);

        let mut i = 0;
        while i < n {
            digits[i] += 1;
            if digits[i] < states {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    Ok(tally.report(Method::Enumeration, q))
}

/// Probability that at least `k` nodes fail (crash or Byzantine).
pub fn at_least_k_failures(d: &Deployment, k: usize) -> Result<f64, AnalysisError> {
    check_profiles(d)?;
    if k == 0 {
        return Ok(1.0);
    }
    let n = d.len();
    if k > n {
        return Ok(0.0);
    }
    // one-dimensional Poisson-binomial over p_fail
    let mut pmf = vec![0.0; n + 1];
    pmf[0] = 1.0;
    for (seen, profile) in d.profiles().enumerate() {
        let (pf, ps) = (profile.p_fail(), 1.0 - profile.p_fail());
        for j in (0..=seen + 1).rev() {
            pmf[j] = pmf[j] * ps + if j > 0 { pmf[j - 1] * pf } else { 0.0 };
        }
    }
    // summing the tail from the far end adds small terms first
    Ok(pmf[k..].iter().rev().copied().collect::<CompensatedSum>().value().min(1.0))
}

/// Probability that every listed member fails.
pub fn specific_quorum_loss(members: &[FaultProfile]) -> Result<f64, AnalysisError> {
    if members.is_empty() {
        return Err(AnalysisError::Domain("quorum has no members".into()));
    }
    for m in members {
        m.check().map_err(|e| AnalysisError::Domain(e.to_string()))?;
    }
    Ok(members.iter().map(FaultProfile::p_fail).product())
}

/// Probability that a uniformly random `s`-subset of the deployment
/// contains at least one node that does not fail.
pub fn random_quorum_contains_correct(d: &Deployment, s: usize) -> Result<f64, AnalysisError> {
    check_profiles(d)?;
    let n = d.len();
    if s == 0 || s > n {
        return Err(AnalysisError::Domain(format!("quorum size {s} outside 1..={n}")));
    }
    let fails: Vec<f64> = d.profiles().map(|p| p.p_fail()).collect();
    let mean_loss =
        if n <= SUBSET_ENUMERATION_LIMIT { subset_mean_loss(&fails, s) } else { symmetric_mean_loss(&fails, s) };
    Ok(1.0 - mean_loss)
}

/// Average over all s-subsets of the probability that the whole subset fails.
fn subset_mean_loss(fails: &[f64], s: usize) -> f64 {
    let mut sum = CompensatedSum::new();
    for_each_combination(fails.len(), s, |subset| {
        sum.add(subset.iter().map(|&i| fails[i]).product());
    });
    sum.value() / binomial(fails.len(), s)
}

/// Same quantity as [`subset_mean_loss`] via the normalized elementary
/// symmetric polynomial `e_s(p) / C(N, s)`, built one node at a time.
fn symmetric_mean_loss(fails: &[f64], s: usize) -> f64 {
    // mean[k] = e_k(first m nodes) / C(m, k)
    let mut mean = vec![0.0; s + 1];
    mean[0] = 1.0;
    for (idx, &p) in fails.iter().enumerate() {
        let m = (idx + 1) as f64;
        for k in (1..=s.min(idx + 1)).rev() {
            let kf = k as f64;
            mean[k] = (m - kf) / m * mean[k] + kf / m * p * mean[k - 1];
        }
    }
    mean[s]
}

/// Probability that at least one member of an explicit quorum survives.
///
/// `members` are node indices into the deployment. When `required_class` is
/// given, the deployment must contain a node of that class and the quorum
/// must include one.
pub fn constrained_quorum_durability(
    d: &Deployment,
    members: &[usize],
    required_class: Option<&str>,
) -> Result<f64, AnalysisError> {
    check_profiles(d)?;
    let mut seen = HashSet::new();
    for &m in members {
        if m >= d.len() {
            return Err(AnalysisError::Domain(format!(
                "quorum member {m} is not in a deployment of {} nodes",
                d.len()
            )));
        }
        if !seen.insert(m) {
            return Err(AnalysisError::Domain(format!("quorum member {m} listed twice")));
        }
    }
    if let Some(label) = required_class {
        let has_class = |i: &usize| d.nodes()[*i].class.as_deref() == Some(label);
        if !(0..d.len()).any(|i| has_class(&i)) {
            return Err(AnalysisError::Constraint(format!("no node of class {label} in the deployment")));
        }
        if !members.iter().any(has_class) {
            return Err(AnalysisError::Constraint(format!("quorum has no node of class {label}")));
        }
    }
    let profiles: Vec<FaultProfile> = members.iter().map(|&i| d.nodes()[i].profile).collect();
    Ok(1.0 - specific_quorum_loss(&profiles)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fault_model::Node;

    fn crash(p: f64) -> FaultProfile {
        FaultProfile::crash(p).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn count_distribution_examples() {
        let d = Deployment::homogeneous(3, crash(0.01));
        let dist = count_distribution(&d).unwrap();
        assert!(close(dist.get(0, 0), 0.970299, 1e-15));
        assert!(close(dist.total_mass(), 1.0, 1e-12));

        let d = Deployment::from_profiles([crash(0.1), crash(0.2)]);
        assert!(close(count_distribution(&d).unwrap().get(1, 0), 0.26, 1e-15));

        let d = Deployment::from_profiles([FaultProfile::new(0.04, 0.0001).unwrap()]);
        let dist = count_distribution(&d).unwrap();
        assert!(close(dist.get(0, 1), 0.0001, 1e-18));
        assert!(close(dist.get(1, 0), 0.04, 1e-18));
        assert_eq!(dist.get(1, 1), 0.0);
    }

    #[test]
    fn enumeration_reproduces_small_tables() {
        let d = Deployment::homogeneous(3, crash(0.01));
        let q = QuorumSpec::raft(3, 2, 2).unwrap();
        let r = enumerate_exact(&d, &q).unwrap();
        assert!(close(r.p_safe_and_live, 0.999702, 1e-12));

        let d = Deployment::homogeneous(4, FaultProfile::byzantine(0.01).unwrap());
        let q = QuorumSpec::pbft(4, 3, 3, 3, 2).unwrap();
        assert!(close(enumerate_exact(&d, &q).unwrap().p_safe, 0.99940797, 1e-12));

        let d = Deployment::homogeneous(5, crash(0.02));
        let q = QuorumSpec::raft(5, 3, 3).unwrap();
        assert!(close(enumerate_exact(&d, &q).unwrap().p_safe_and_live, 0.9999223808, 1e-12));
    }

    #[test]
    fn enumeration_cap() {
        let d = Deployment::homogeneous(10, FaultProfile::byzantine(0.01).unwrap());
        let q = QuorumSpec::pbft(10, 7, 7, 7, 4).unwrap();
        assert_eq!(enumerate_exact(&d, &q).unwrap_err(), AnalysisError::Capacity { n: 10, cap: 9 });
        assert!(enumerate_exact_with_cap(&d, &q, 10).is_ok());
    }

    #[test]
    fn dp_examples() {
        // mixed cluster: four 8% nodes plus three 1% nodes
        let d =
            Deployment::from_profiles(std::iter::repeat_n(crash(0.08), 4).chain(std::iter::repeat_n(crash(0.01), 3)));
        let q = QuorumSpec::raft(7, 4, 4).unwrap();
        let dp = analyze_dp(&d, &q).unwrap();
        // frozen from the enumeration oracle
        assert!(close(dp.p_safe_and_live, 0.9998931438592, 1e-12));
        let en = enumerate_exact(&d, &q).unwrap();
        assert!(close(dp.p_safe_and_live, en.p_safe_and_live, 1e-14));

        let d = Deployment::homogeneous(9, crash(0.08));
        let q = QuorumSpec::raft_majority(9).unwrap();
        assert!(close(analyze_dp(&d, &q).unwrap().p_safe_and_live, 0.9996864181462726, 1e-12));

        let d = Deployment::homogeneous(5, crash(0.0));
        let r = analyze_dp(&d, &QuorumSpec::raft_majority(5).unwrap()).unwrap();
        assert_eq!((r.p_safe, r.p_live, r.p_safe_and_live), (1.0, 1.0, 1.0));
    }

    #[test]
    fn dp_handles_hundreds_of_nodes() {
        let d = Deployment::homogeneous(300, crash(0.1));
        let q = QuorumSpec::raft_majority(300).unwrap();
        let r = analyze_dp(&d, &q).unwrap();
        assert!(r.p_live > 1.0 - 1e-12);
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let d = Deployment::homogeneous(3, crash(0.01));
        let q = QuorumSpec::raft_majority(4).unwrap();
        assert!(matches!(analyze_dp(&d, &q), Err(AnalysisError::SizeMismatch { .. })));
        let d = Deployment::homogeneous(3, FaultProfile::new(0.01, 0.01).unwrap());
        let q = QuorumSpec::raft_majority(3).unwrap();
        assert!(matches!(analyze_dp(&d, &q), Err(AnalysisError::Invalid(_))));
    }

    #[test]
    fn failure_tail_examples() {
        let d = Deployment::homogeneous(100, crash(0.1));
        let tail = at_least_k_failures(&d, 10).unwrap();
        // exact binomial tail, computed independently
        assert!(close(tail, 0.5487098345579977, 1e-12));
        assert_eq!(at_least_k_failures(&d, 0).unwrap(), 1.0);

        let d = Deployment::homogeneous(3, crash(0.01));
        assert!(close(at_least_k_failures(&d, 2).unwrap(), 0.000298, 1e-15));
        assert_eq!(at_least_k_failures(&d, 4).unwrap(), 0.0);
    }

    #[test]
    fn quorum_loss_examples() {
        let ten = vec![crash(0.1); 10];
        let loss = specific_quorum_loss(&ten).unwrap();
        assert!(((loss - 1e-10) / 1e-10).abs() < 1e-12);
        assert_eq!(specific_quorum_loss(&[crash(0.3), crash(0.0)]).unwrap(), 0.0);
        let mixed = [crash(0.08), crash(0.08), crash(0.08), crash(0.01)];
        assert!(close(specific_quorum_loss(&mixed).unwrap(), 5.12e-6, 1e-18));
        assert!(specific_quorum_loss(&[]).is_err());
    }

    #[test]
    fn random_quorum_examples() {
        let d = Deployment::homogeneous(100, crash(0.01));
        let p = random_quorum_contains_correct(&d, 5).unwrap();
        assert!(close(p, 1.0 - 1e-10, 1e-15));
        let d = Deployment::homogeneous(10, crash(0.01));
        assert!(close(random_quorum_contains_correct(&d, 5).unwrap(), 1.0 - 1e-10, 1e-15));

        let d = Deployment::homogeneous(4, crash(0.5));
        assert!(close(random_quorum_contains_correct(&d, 1).unwrap(), 0.5, 1e-15));
        assert!(random_quorum_contains_correct(&d, 5).is_err());
    }

    #[test]
    fn random_quorum_heterogeneous() {
        let d =
            Deployment::from_profiles(std::iter::repeat_n(crash(0.08), 4).chain(std::iter::repeat_n(crash(0.01), 3)));
        // average of the 35 subset products, enumerated by class counts:
        // C(4,k)*C(3,3-k) * 0.08^k * 0.01^(3-k)
        let by_hand: f64 = (0..=3)
            .map(|k| binomial(4, k) * binomial(3, 3 - k) * 0.08f64.powi(k as i32) * 0.01f64.powi(3 - k as i32))
            .sum::<f64>()
            / 35.0;
        let p = random_quorum_contains_correct(&d, 3).unwrap();
        assert!(close(p, 1.0 - by_hand, 1e-16));
    }

    #[test]
    fn symmetric_route_matches_enumeration() {
        let fails: Vec<f64> = (0..14).map(|i| 0.01 + 0.03 * i as f64).collect();
        for s in 1..=14 {
            let a = subset_mean_loss(&fails, s);
            let b = symmetric_mean_loss(&fails, s);
            assert!((a - b).abs() <= 1e-14 * a.max(1e-300), "s={s}: {a} vs {b}");
        }
    }

    #[test]
    fn durability_examples() {
        let d = Deployment::new(
            (0..4)
                .map(|i| Node::new(format!("u{i}"), crash(0.08)).with_class("spot"))
                .chain((0..3).map(|i| Node::new(format!("r{i}"), crash(0.01)).with_class("reliable")))
                .collect(),
        );
        let p = constrained_quorum_durability(&d, &[0, 1, 2, 3], None).unwrap();
        assert!(close(p, 0.99995904, 1e-15));
        let p = constrained_quorum_durability(&d, &[0, 1, 2, 4], Some("reliable")).unwrap();
        assert!(close(p, 0.99999488, 1e-15));
        assert!(matches!(
            constrained_quorum_durability(&d, &[0, 1, 2, 3], Some("reliable")),
            Err(AnalysisError::Constraint(_))
        ));

        let spot_only = Deployment::new(d.nodes()[..4].to_vec());
        assert!(matches!(
            constrained_quorum_durability(&spot_only, &[0, 1], Some("reliable")),
            Err(AnalysisError::Constraint(_))
        ));
        assert!(constrained_quorum_durability(&d, &[9], None).is_err());
    }
}
