//! Reliability reports shared by the exact and sampled analyses.

use serde::{Deserialize, Serialize};

use crate::predicates::QuorumSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Enumeration,
    CountDp,
    MonteCarlo,
}

/// Standard errors of a Monte Carlo report, one per reported probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StdErrors {
    pub p_safe: f64,
    pub p_live: f64,
    pub p_safe_and_live: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingInfo {
    pub samples: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub p_safe: f64,
    pub p_live: f64,
    pub p_safe_and_live: f64,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<StdErrors>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingInfo>,
    pub n: usize,
    pub quorums: QuorumSpec,
}

impl ReliabilityReport {
    /// Builds an exact report, pinning `p_safe_and_live` inside the Fréchet
    /// bounds that independent rounding of the three sums could nudge it out of.
    pub(crate) fn exact(p_safe: f64, p_live: f64, p_safe_and_live: f64, method: Method, quorums: QuorumSpec) -> Self {
        let p_safe = p_safe.clamp(0.0, 1.0);
        let p_live = p_live.clamp(0.0, 1.0);
        let lower = (p_safe + p_live - 1.0).max(0.0);
        let upper = p_safe.min(p_live);
        let lower = lower.min(upper);
        ReliabilityReport {
            p_safe,
            p_live,
            p_safe_and_live: p_safe_and_live.clamp(lower, upper),
            method,
            stderr: None,
            sampling: None,
            n: quorums.n(),
            quorums,
        }
    }

    /// Checks `max(0, p_safe + p_live - 1) <= p_safe_and_live <= min(p_safe, p_live)`
    /// up to rounding in the lower bound's sum.
    pub fn satisfies_frechet_bounds(&self) -> bool {
        const SLACK: f64 = 1e-12;
        let lower = (self.p_safe + self.p_live - 1.0).max(0.0);
        let upper = self.p_safe.min(self.p_live);
        lower - SLACK <= self.p_safe_and_live && self.p_safe_and_live <= upper
    }
}

/// Number of nines: `floor(-log10(1 - p))`, `None` when `p == 1`.
pub fn nines(p: f64) -> Option<u32> {
    let miss = 1.0 - p;
    if miss <= 0.0 {
        return None;
    }
    let raw = -miss.log10();
    // 1 - 0.999 is not exactly 1e-3; tolerate representation error near integers.
    let snapped = if (raw - raw.round()).abs() < 1e-6 { raw.round() } else { raw.floor() };
    Some(snapped.max(0.0) as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nines_examples() {
        assert_eq!(nines(0.999702), Some(3));
        assert_eq!(nines(0.999), Some(3));
        assert_eq!(nines(0.5), Some(0));
        assert_eq!(nines(1.0 - 1e-10), Some(10));
        assert_eq!(nines(1.0), None);
        assert_eq!(nines(0.0), Some(0));
    }
}
