//! Seeded Monte Carlo cross-check of the exact analyses.
//!
//! Sample `i` always consumes the same slice of a ChaCha8 keystream
//! (one 64-bit word per node), so estimates depend only on
//! `(deployment, quorums, samples, seed)` and never on how batches are
//! scheduled across threads.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exact::{check_inputs, AnalysisError};
use crate::fault_model::{Deployment, FaultProfile};
use crate::predicates::{classify_counts, CountVector, FailureConfiguration, NodeStatus, QuorumSpec};
use crate::report::{Method, ReliabilityReport, SamplingInfo, StdErrors};

const BATCH: u64 = 1 << 14;
// ChaCha positions are counted in 32-bit words; each draw takes two.
const WORDS_PER_DRAW: u128 = 2;

/// A sample-mean estimate of one probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_count(successes: u64, samples: u64, seed: u64) -> Self {
        let p_hat = successes as f64 / samples as f64;
        McEstimate { p_hat, stderr: (p_hat * (1.0 - p_hat) / samples as f64).sqrt(), samples, seed }
    }
}

/// Estimates for the three reported events of one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McRun {
    pub safe: McEstimate,
    pub live: McEstimate,
    pub safe_and_live: McEstimate,
}

impl McRun {
    pub fn to_report(&self, quorums: QuorumSpec) -> ReliabilityReport {
        ReliabilityReport {
            p_safe: self.safe.p_hat,
            p_live: self.live.p_hat,
            p_safe_and_live: self.safe_and_live.p_hat,
            method: Method::MonteCarlo,
            stderr: Some(StdErrors {
                p_safe: self.safe.stderr,
                p_live: self.live.stderr,
                p_safe_and_live: self.safe_and_live.stderr,
            }),
            sampling: Some(SamplingInfo { samples: self.safe.samples, seed: self.safe.seed }),
            n: quorums.n(),
            quorums,
        }
    }
}

/// Uniform in [0, 1) from the top 53 bits of a word.
fn unit(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn status_for(profile: &FaultProfile, u: f64) -> NodeStatus {
    if u < profile.p_crash {
        NodeStatus::Crashed
    } else if u < profile.p_crash + profile.p_byz {
        NodeStatus::Byzantine
    } else {
        NodeStatus::Correct
    }
}

/// Draws each node's status independently; one 64-bit word per node.
pub fn sample_configuration<R: RngCore + ?Sized>(d: &Deployment, rng: &mut R) -> FailureConfiguration {
    FailureConfiguration(d.profiles().map(|p| status_for(&p, unit(rng.next_u64()))).collect())
}

/// Generator positioned at the first draw of sample `index`.
pub fn rng_for_sample(seed: u64, nodes: usize, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(index as u128 * nodes as u128 * WORDS_PER_DRAW);
    rng
}

/// Per-event success counts over samples `start..end`.
fn count_range(profiles: &[FaultProfile], q: &QuorumSpec, seed: u64, start: u64, end: u64) -> [u64; 3] {
    let mut rng = rng_for_sample(seed, profiles.len(), start);
    let mut hits = [0u64; 3];
    for _ in start..end {
        let mut counts = CountVector::default();
        for p in profiles {
            match status_for(p, unit(rng.next_u64())) {
                NodeStatus::Correct => counts.correct += 1,
                NodeStatus::Crashed => counts.crashed += 1,
                NodeStatus::Byzantine => counts.byz += 1,
            }
        }
        let c = classify_counts(&counts, q);
        hits[0] += c.safe as u64;
        hits[1] += c.live as u64;
        hits[2] += (c.safe && c.live) as u64;
    }
    hits
}

/// Sample-mean estimates of the safe, live and safe-and-live probabilities.
pub fn estimate_run(d: &Deployment, q: &QuorumSpec, samples: u64, seed: u64) -> Result<McRun, AnalysisError> {
    check_inputs(d, q)?;
    if samples == 0 {
        return Err(AnalysisError::Domain("samples must be at least 1".into()));
    }
    let profiles: Vec<FaultProfile> = d.profiles().collect();
    let batches = samples.div_ceil(BATCH);
    // integer counts, so the reduction order cannot change the result
    let hits = (0..batches)
        .into_par_iter()
        .map(|b| count_range(&profiles, q, seed, b * BATCH, ((b + 1) * BATCH).min(samples)))
        .reduce(|| [0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
    Ok(McRun {
        safe: McEstimate::from_count(hits[0], samples, seed),
        live: McEstimate::from_count(hits[1], samples, seed),
        safe_and_live: McEstimate::from_count(hits[2], samples, seed),
    })
}

pub fn estimate(d: &Deployment, q: &QuorumSpec, samples: u64, seed: u64) -> Result<ReliabilityReport, AnalysisError> {
    Ok(estimate_run(d, q, samples, seed)?.to_report(*q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::enumerate_exact;

    fn crash(p: f64) -> FaultProfile {
        FaultProfile::crash(p).unwrap()
    }

    #[test]
    fn degenerate_profiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = Deployment::homogeneous(5, crash(0.0));
        assert_eq!(sample_configuration(&d, &mut rng), FailureConfiguration::all_correct(5));
        let d = Deployment::homogeneous(5, crash(1.0));
        assert!(sample_configuration(&d, &mut rng).statuses().iter().all(|s| *s == NodeStatus::Crashed));
        let d = Deployment::homogeneous(5, FaultProfile::byzantine(1.0).unwrap());
        assert_eq!(sample_configuration(&d, &mut rng).counts().byz, 5);
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = Deployment::homogeneous(9, FaultProfile::new(0.3, 0.2).unwrap());
        let a = sample_configuration(&d, &mut ChaCha8Rng::seed_from_u64(42));
        let b = sample_configuration(&d, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }

    #[test]
    fn sample_index_addresses_keystream() {
        // drawing samples 0..3 sequentially equals seeking to sample 2 directly
        let d = Deployment::homogeneous(4, FaultProfile::new(0.4, 0.3).unwrap());
        let mut seq = rng_for_sample(9, 4, 0);
        let _ = sample_configuration(&d, &mut seq);
        let _ = sample_configuration(&d, &mut seq);
        let third = sample_configuration(&d, &mut seq);
        assert_eq!(third, sample_configuration(&d, &mut rng_for_sample(9, 4, 2)));
    }

    #[test]
    fn perfect_deployment_estimates_one() {
        let d = Deployment::homogeneous(3, crash(0.0));
        let q = QuorumSpec::raft_majority(3).unwrap();
        let r = estimate(&d, &q, 1000, 1).unwrap();
        assert_eq!(r.p_safe_and_live, 1.0);
        assert_eq!(r.stderr.unwrap().p_safe_and_live, 0.0);
    }

    #[test]
    fn zero_samples_rejected() {
        let d = Deployment::homogeneous(3, crash(0.1));
        let q = QuorumSpec::raft_majority(3).unwrap();
        assert!(matches!(estimate(&d, &q, 0, 1), Err(AnalysisError::Domain(_))));
    }

    #[test]
    fn agrees_with_enumeration_on_a_noisy_instance() {
        let d = Deployment::homogeneous(5, FaultProfile::new(0.1, 0.1).unwrap());
        let q = QuorumSpec::pbft(5, 4, 4, 4, 2).unwrap();
        let exact = enumerate_exact(&d, &q).unwrap();
        let run = estimate_run(&d, &q, 200_000, 3).unwrap();
        for (est, truth) in
            [(run.safe, exact.p_safe), (run.live, exact.p_live), (run.safe_and_live, exact.p_safe_and_live)]
        {
            assert!((est.p_hat - truth).abs() <= 5.0 * est.stderr, "{est:?} vs {truth}");
        }
    }

    #[test]
    fn stderr_formula() {
        let e = McEstimate::from_count(25, 100, 0);
        assert_eq!(e.p_hat, 0.25);
        assert!((e.stderr - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-18);
    }
}
