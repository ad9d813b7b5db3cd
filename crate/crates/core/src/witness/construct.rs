//! Scripted schedules for each violation kind.

use super::{EventKind, ProtocolEvent, StallProof, ViolationKind, ViolationWitness};
use crate::predicates::{FailureConfiguration, LivenessReading, NodeStatus, PbftQuorums, QuorumSpec, RaftQuorums};

const SLOT: u64 = 0;
const FIRST: u64 = 1;
const SECOND: u64 = 2;

#[derive(Default)]
struct Script {
    events: Vec<ProtocolEvent>,
}

impl Script {
    fn push(&mut self, actor: usize, kind: EventKind, view: u64, value: u64, target: Option<usize>) {
        let step = self.events.len();
        self.events.push(ProtocolEvent { step, actor, kind, view, slot: SLOT, value, target });
    }

    fn elect(&mut self, voters: &[usize], leader: usize, view: u64) {
        for &v in voters {
            self.push(v, EventKind::ViewChangeRequest, view, 0, Some(leader));
        }
        self.push(leader, EventKind::ViewChangeComplete, view, 0, None);
    }

    fn all(&mut self, actors: &[usize], kind: EventKind, view: u64, value: u64) {
        for &a in actors {
            self.push(a, kind, view, value, None);
        }
    }

    fn one(&mut self, actor: usize, kind: EventKind, view: u64, value: u64) {
        self.push(actor, kind, view, value, None);
    }

    /// Crash every crashed node, then optionally stall.
    fn finish(mut self, cfg: &FailureConfiguration, stall: bool) -> Vec<ProtocolEvent> {
        for (i, s) in cfg.statuses().iter().enumerate() {
            if *s == NodeStatus::Crashed {
                self.one(i, EventKind::Crash, 0, 0);
            }
        }
        if stall {
            self.one(0, EventKind::Stall, 0, 0);
        }
        self.events
    }
}

/// `len` consecutive node indices starting at `start`, wrapping at `n`.
fn window(start: usize, len: usize, n: usize) -> Vec<usize> {
    (0..len).map(|i| (start + i) % n).collect()
}

fn split(cfg: &FailureConfiguration) -> (Vec<usize>, Vec<usize>) {
    let (byz, honest): (Vec<usize>, Vec<usize>) =
        (0..cfg.len()).partition(|&i| cfg.statuses()[i] == NodeStatus::Byzantine);
    (honest, byz)
}

/// Smallest view led by `leader` that is greater than `after`.
fn pbft_view_led_by(leader: usize, n: usize, after: Option<u64>) -> u64 {
    let base = leader as u64;
    match after {
        None => base,
        Some(a) => {
            let n = n as u64;
            let mut v = base;
            while v <= a {
                v += n;
            }
            v
        }
    }
}

fn applicable(cfg: &FailureConfiguration, q: &QuorumSpec) -> bool {
    q.check().is_ok() && cfg.len() == q.n() && !(matches!(q, QuorumSpec::Raft(_)) && cfg.counts().byz > 0)
}

/// A run in which two honest nodes commit different values for the same
/// slot, when the scripted schedules allow one.
pub fn find_safety_witness(cfg: &FailureConfiguration, q: &QuorumSpec) -> Option<ViolationWitness> {
    if !applicable(cfg, q) {
        return None;
    }
    let (kind, trace) = match q {
        QuorumSpec::Raft(r) => raft_safety(cfg, r)?,
        QuorumSpec::Pbft(p) => pbft_safety(cfg, p)?,
    };
    Some(ViolationWitness { configuration: cfg.clone(), quorums: *q, trace, violation_kind: kind, stall: None })
}

fn raft_safety(cfg: &FailureConfiguration, q: &RaftQuorums) -> Option<(ViolationKind, Vec<ProtocolEvent>)> {
    let n = q.n;
    let mut s = Script::default();
    if n >= 2 * q.q_vc {
        // two disjoint election quorums in the same term
        let (l1, l2) = (0, q.q_vc);
        s.elect(&window(0, q.q_vc, n), l1, 1);
        s.elect(&window(q.q_vc, q.q_vc, n), l2, 1);
        s.one(l1, EventKind::Propose, 1, FIRST);
        s.all(&window(0, q.q_per, n), EventKind::Persist, 1, FIRST);
        s.one(l1, EventKind::Commit, 1, FIRST);
        s.one(l2, EventKind::Propose, 1, SECOND);
        s.all(&window(q.q_vc, q.q_per, n), EventKind::Persist, 1, SECOND);
        s.one(l2, EventKind::Commit, 1, SECOND);
        Some((ViolationKind::SplitBrain, s.finish(cfg, false)))
    } else if n >= q.q_per + q.q_vc {
        // the next election quorum misses every node that persisted
        let (l1, l2) = (0, q.q_per);
        s.elect(&window(0, q.q_vc, n), l1, 1);
        s.one(l1, EventKind::Propose, 1, FIRST);
        s.all(&window(0, q.q_per, n), EventKind::Persist, 1, FIRST);
        s.one(l1, EventKind::Commit, 1, FIRST);
        s.elect(&window(q.q_per, q.q_vc, n), l2, 2);
        s.one(l2, EventKind::Propose, 2, SECOND);
        s.all(&window(q.q_per, q.q_per, n), EventKind::Persist, 2, SECOND);
        s.one(l2, EventKind::Commit, 2, SECOND);
        Some((ViolationKind::LostCommit, s.finish(cfg, false)))
    } else {
        None
    }
}

fn pbft_safety(cfg: &FailureConfiguration, q: &PbftQuorums) -> Option<(ViolationKind, Vec<ProtocolEvent>)> {
    let n = q.n;
    let (honest, byz) = split(cfg);
    let (h, b) = (honest.len(), byz.len());
    // agreement needs two honest committers
    if h < 2 {
        return None;
    }
    let mut s = Script::default();
    if b >= 1 && b + n >= 2 * q.q_eq {
        let leader = byz[0];
        let view = pbft_view_led_by(leader, n, None);
        let k = b.min(q.q_eq);
        let m = q.q_eq - k;
        let shared = &byz[..k];
        let h1 = &honest[..m];
        let h2 = &honest[m..2 * m];
        let q1: Vec<usize> = shared.iter().chain(h1).copied().collect();
        let q2: Vec<usize> = shared.iter().chain(h2).copied().collect();
        let electors: Vec<usize> = byz.iter().chain(&honest).copied().take(q.q_vc).collect();
        s.elect(&electors, leader, view);
        s.one(leader, EventKind::Propose, view, FIRST);
        s.one(leader, EventKind::Equivoke, view, SECOND);
        s.all(&q1, EventKind::Vote, view, FIRST);
        s.all(&q2, EventKind::Vote, view, SECOND);
        let persisters = |first: &[usize]| -> Vec<usize> {
            let mut v = first.to_vec();
            v.extend((0..n).filter(|i| !first.contains(i)));
            v.truncate(q.q_per);
            v
        };
        s.all(&persisters(&q1), EventKind::Persist, view, FIRST);
        s.all(&persisters(&q2), EventKind::Persist, view, SECOND);
        let (x, y) = if m > 0 { (h1[0], h2[0]) } else { (honest[0], honest[1]) };
        s.one(x, EventKind::Commit, view, FIRST);
        s.one(y, EventKind::Commit, view, SECOND);
        Some((ViolationKind::Equivocation, s.finish(cfg, false)))
    } else if b + n >= q.q_per + q.q_vc {
        let hp = q.q_per - b.min(q.q_per);
        let hv = q.q_vc - b.min(q.q_vc);
        let persist_q: Vec<usize> = byz[..b.min(q.q_per)].iter().chain(&honest[..hp]).copied().collect();
        let vc_q: Vec<usize> = byz[..b.min(q.q_vc)].iter().chain(&honest[h - hv..]).copied().collect();
        let (x, y) = (honest[0], honest[1]);

        let (l1, v1) = (0, 0);
        s.elect(&window(0, q.q_vc, n), l1, v1);
        s.one(l1, EventKind::Propose, v1, FIRST);
        s.all(&window(0, q.q_eq, n), EventKind::Vote, v1, FIRST);
        s.all(&persist_q, EventKind::Persist, v1, FIRST);
        s.one(x, EventKind::Commit, v1, FIRST);

        let l2 = byz.first().copied().unwrap_or_else(|| honest[h - hv]);
        let v2 = pbft_view_led_by(l2, n, Some(v1));
        s.elect(&vc_q, l2, v2);
        s.one(l2, EventKind::Propose, v2, SECOND);
        s.all(&window(0, q.q_eq, n), EventKind::Vote, v2, SECOND);
        s.all(&window(0, q.q_per, n), EventKind::Persist, v2, SECOND);
        s.one(y, EventKind::Commit, v2, SECOND);
        Some((ViolationKind::LostCommit, s.finish(cfg, false)))
    } else {
        None
    }
}

/// A stalled state with a counting proof that no progress quorum forms.
///
/// PBFT quorums are evaluated under the corrected liveness reading; the
/// returned witness carries that reading.
pub fn find_liveness_witness(cfg: &FailureConfiguration, q: &QuorumSpec) -> Option<ViolationWitness> {
    if !applicable(cfg, q) {
        return None;
    }
    let q = q.with_reading(LivenessReading::Corrected);
    let c = cfg.counts();
    let mut s = Script::default();
    let proof = if c.correct < q.max_progress_quorum() {
        StallProof::QuorumUnavailable { required: q.max_progress_quorum(), available: c.correct }
    } else {
        let QuorumSpec::Pbft(p) = q else {
            return None;
        };
        let (honest, byz) = split(cfg);
        let view = 1;
        let leader = 1 % p.n;
        if c.byz >= p.q_vc_t {
            for &b in &byz {
                s.push(b, EventKind::ViewChangeRequest, view, 0, Some(leader));
            }
            StallProof::SpuriousViewChanges { view, byzantine: c.byz, trigger: p.q_vc_t }
        } else if c.byz + p.q_vc_t > p.q_vc {
            let k = c.byz.min(p.q_vc);
            let electors: Vec<usize> = byz[..k].iter().chain(&honest[..p.q_vc - k]).copied().collect();
            s.elect(&electors, leader, view);
            StallProof::ViewChangeStarved { view, honest_requests: p.q_vc - k, trigger: p.q_vc_t }
        } else {
            return None;
        }
    };
    Some(ViolationWitness {
        configuration: cfg.clone(),
        quorums: q,
        trace: s.finish(cfg, true),
        violation_kind: ViolationKind::Stall,
        stall: Some(proof),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witness::check_witness;

    fn cfg(s: &str) -> FailureConfiguration {
        FailureConfiguration::parse(s).unwrap()
    }

    fn quorum_members(w: &ViolationWitness, kind: EventKind, value: u64) -> Vec<usize> {
        w.trace.iter().filter(|e| e.kind == kind && e.value == value).map(|e| e.actor).collect()
    }

    #[test]
    fn raft_split_brain_example() {
        let q = QuorumSpec::raft(4, 2, 2).unwrap();
        let w = find_safety_witness(&cfg("CCCC"), &q).unwrap();
        assert_eq!(w.violation_kind, ViolationKind::SplitBrain);
        let electors: Vec<(usize, usize)> = w
            .trace
            .iter()
            .filter(|e| e.kind == EventKind::ViewChangeRequest)
            .map(|e| (e.actor, e.target.unwrap()))
            .collect();
        assert_eq!(electors, vec![(0, 0), (1, 0), (2, 2), (3, 2)]);
        assert!(check_witness(&w));
    }

    #[test]
    fn raft_majorities_have_no_witness() {
        let q = QuorumSpec::raft(3, 2, 2).unwrap();
        for s in ["CCC", "XCC", "XXC", "XXX"] {
            assert!(find_safety_witness(&cfg(s), &q).is_none());
        }
    }

    #[test]
    fn pbft_equivocation_example() {
        let q = QuorumSpec::pbft(4, 3, 3, 3, 2).unwrap();
        let w = find_safety_witness(&cfg("BBCC"), &q).unwrap();
        assert_eq!(w.violation_kind, ViolationKind::Equivocation);
        assert_eq!(quorum_members(&w, EventKind::Vote, FIRST), vec![0, 1, 2]);
        assert_eq!(quorum_members(&w, EventKind::Vote, SECOND), vec![0, 1, 3]);
        assert!(check_witness(&w));
    }

    #[test]
    fn pbft_lost_commit() {
        // q_per + q_vc - n = 1 byzantine node suffices, 2q_eq - n = 2 does not
        let q = QuorumSpec::pbft(4, 3, 2, 3, 2).unwrap();
        let w = find_safety_witness(&cfg("BCCC"), &q).unwrap();
        assert_eq!(w.violation_kind, ViolationKind::LostCommit);
        assert!(check_witness(&w));
    }

    #[test]
    fn liveness_examples() {
        let q = QuorumSpec::raft(3, 2, 2).unwrap();
        let w = find_liveness_witness(&cfg("XXC"), &q).unwrap();
        assert_eq!(w.violation_kind, ViolationKind::Stall);
        assert!(check_witness(&w));
        assert!(find_liveness_witness(&cfg("CCX"), &q).is_none());
        let q = QuorumSpec::pbft(4, 3, 3, 3, 2).unwrap();
        assert!(find_liveness_witness(&cfg("BCCC"), &q).is_none());
    }

    #[test]
    fn pbft_stall_proofs() {
        let q = QuorumSpec::pbft(5, 3, 3, 3, 2).unwrap();
        let w = find_liveness_witness(&cfg("BBCCC"), &q).unwrap();
        assert!(matches!(w.stall, Some(StallProof::SpuriousViewChanges { byzantine: 2, .. })));
        assert!(check_witness(&w));
        let q = QuorumSpec::pbft(5, 3, 3, 3, 3).unwrap();
        let w = find_liveness_witness(&cfg("BCCCC"), &q).unwrap();
        assert!(matches!(w.stall, Some(StallProof::ViewChangeStarved { honest_requests: 2, trigger: 3, .. })));
        assert!(check_witness(&w));
    }

    #[test]
    fn tampering_is_detected() {
        let q = QuorumSpec::raft(4, 2, 2).unwrap();
        let w = find_safety_witness(&cfg("CCCC"), &q).unwrap();
        // move a vote of the second election into the first quorum
        let mut t = w.clone();
        let i = t.trace.iter().position(|e| e.kind == EventKind::ViewChangeRequest && e.actor == 2).unwrap();
        t.trace[i].actor = 0;
        assert!(!check_witness(&t));

        let mut empty = w.clone();
        empty.trace.clear();
        assert!(!check_witness(&empty));

        let mut relabeled = w;
        relabeled.violation_kind = ViolationKind::LostCommit;
        assert!(!check_witness(&relabeled));
    }
}
