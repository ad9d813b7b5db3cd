//! Independent replay of a witness trace.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::{EventKind, ProtocolEvent, StallProof, ViolationKind, ViolationWitness};
use crate::fault_model::ProtocolKind;
use crate::predicates::{NodeStatus, QuorumSpec};

type Key = (u64, u64, u64); // view, slot, value

struct Commit {
    view: u64,
    slot: u64,
    value: u64,
}

#[derive(Default)]
struct Replay {
    crashed: Vec<bool>,
    view_of: Vec<Option<u64>>,
    // (view, target) -> distinct requesters, in arrival order
    requests: HashMap<(u64, usize), Vec<usize>>,
    requested: HashSet<(usize, u64)>,
    byz_requesters: HashMap<u64, BTreeSet<usize>>,
    leaders: HashMap<u64, BTreeSet<usize>>,
    certificates: HashMap<(u64, usize), Vec<usize>>,
    completed_at: HashMap<u64, usize>,
    proposals: HashMap<(usize, u64, u64), Vec<u64>>,
    proposed: HashSet<Key>,
    equivocated: HashSet<(u64, u64)>,
    voted: HashMap<(usize, u64, u64), u64>,
    votes: HashMap<Key, BTreeSet<usize>>,
    persists: HashMap<Key, BTreeSet<usize>>,
    persisted_by: Vec<Vec<Key>>,
    committed: HashMap<(usize, u64), u64>,
    honest_commits: Vec<Commit>,
}

struct Ctx<'a> {
    q: &'a QuorumSpec,
    status: &'a [NodeStatus],
}

impl Ctx<'_> {
    fn honest(&self, i: usize) -> bool {
        self.status[i] != NodeStatus::Byzantine
    }
}

/// Replays `w.trace` against the protocol rules and confirms it exhibits
/// `w.violation_kind`. Returns `false` on any malformation.
pub fn check_witness(w: &ViolationWitness) -> bool {
    let q = &w.quorums;
    let status = w.configuration.statuses();
    if q.check().is_err() || status.len() != q.n() {
        return false;
    }
    if q.protocol() == ProtocolKind::Raft && status.contains(&NodeStatus::Byzantine) {
        return false;
    }
    let ctx = Ctx { q, status };
    let n = q.n();
    let mut r = Replay {
        crashed: vec![false; n],
        view_of: vec![None; n],
        persisted_by: vec![Vec::new(); n],
        ..Replay::default()
    };
    let last = w.trace.len().checked_sub(1);
    for (i, e) in w.trace.iter().enumerate() {
        if e.step != i || e.actor >= n {
            return false;
        }
        if e.kind == EventKind::Stall && Some(i) != last {
            return false;
        }
        if !r.apply(&ctx, e) {
            return false;
        }
    }
    // every crashed node must have crashed by the end
    if (0..n).any(|i| (status[i] == NodeStatus::Crashed) != r.crashed[i]) {
        return false;
    }
    match w.violation_kind {
        ViolationKind::Stall => {
            let stalled = last.is_some_and(|l| w.trace[l].kind == EventKind::Stall);
            stalled && w.stall.is_some_and(|p| r.proves_stall(&ctx, &w.trace, p))
        }
        kind => w.stall.is_none() && r.exhibits(kind),
    }
}

impl Replay {
    fn apply(&mut self, ctx: &Ctx, e: &ProtocolEvent) -> bool {
        let a = e.actor;
        let honest = ctx.honest(a);
        if e.kind == EventKind::Stall {
            return true;
        }
        if self.crashed[a] {
            return false;
        }
        if e.kind == EventKind::Crash {
            self.crashed[a] = true;
            return ctx.status[a] == NodeStatus::Crashed;
        }
        if honest {
            if self.view_of[a].is_some_and(|v| e.view < v) {
                return false;
            }
            self.view_of[a] = Some(e.view);
        }
        let pbft = ctx.q.protocol() == ProtocolKind::Pbft;
        let n = ctx.q.n();
        let key = (e.view, e.slot, e.value);
        match e.kind {
            EventKind::ViewChangeRequest => {
                let Some(t) = e.target else { return false };
                if t >= n || (pbft && t as u64 != e.view % n as u64) {
                    return false;
                }
                if !self.requested.insert((a, e.view)) && honest {
                    return false;
                }
                let list = self.requests.entry((e.view, t)).or_default();
                if !list.contains(&a) {
                    list.push(a);
                }
                if !honest {
                    self.byz_requesters.entry(e.view).or_default().insert(a);
                }
                true
            }
            EventKind::ViewChangeComplete => {
                if pbft && a as u64 != e.view % n as u64 {
                    return false;
                }
                let cert = self.requests.get(&(e.view, a)).cloned().unwrap_or_default();
                if cert.len() < ctx.q.q_vc() || !self.leaders.entry(e.view).or_default().insert(a) {
                    return false;
                }
                self.certificates.insert((e.view, a), cert);
                self.completed_at.entry(e.view).or_insert(e.step);
                true
            }
            EventKind::Propose | EventKind::Equivoke => {
                if !self.leaders.get(&e.view).is_some_and(|l| l.contains(&a)) {
                    return false;
                }
                let prior = self.proposals.entry((a, e.view, e.slot)).or_default();
                let conflicting = prior.iter().any(|&x| x != e.value);
                if e.kind == EventKind::Equivoke {
                    if honest || !conflicting {
                        return false;
                    }
                    self.equivocated.insert((e.view, e.slot));
                } else if conflicting {
                    return false;
                }
                prior.push(e.value);
                if !self.respects_history(ctx, a, e) {
                    return false;
                }
                self.proposed.insert(key);
                true
            }
            EventKind::Vote => {
                if !pbft || !self.proposed.contains(&key) {
                    return false;
                }
                if honest {
                    match self.voted.insert((a, e.view, e.slot), e.value) {
                        Some(x) if x != e.value => return false,
                        _ => {}
                    }
                }
                self.votes.entry(key).or_default().insert(a);
                true
            }
            EventKind::Persist => {
                let certified = match ctx.q.q_eq() {
                    Some(q_eq) => self.votes.get(&key).map_or(0, BTreeSet::len) >= q_eq,
                    None => self.proposed.contains(&key),
                };
                if !certified {
                    return false;
                }
                if self.persists.entry(key).or_default().insert(a) {
                    self.persisted_by[a].push(key);
                }
                true
            }
            EventKind::Commit => {
                if self.persists.get(&key).map_or(0, BTreeSet::len) < ctx.q.q_per() {
                    return false;
                }
                if honest {
                    if self.committed.insert((a, e.slot), e.value).is_some() {
                        return false;
                    }
                    self.honest_commits.push(Commit { view: e.view, slot: e.slot, value: e.value });
                }
                true
            }
            EventKind::Crash | EventKind::Stall => unreachable!(),
        }
    }

    /// A proposal must carry a value persisted in the highest view reported
    /// by the honest members of the proposer's view-change quorum.
    fn respects_history(&self, ctx: &Ctx, leader: usize, e: &ProtocolEvent) -> bool {
        let cert = &self.certificates[&(e.view, leader)];
        let mut reporters: Vec<usize> = cert.iter().copied().filter(|&m| ctx.honest(m)).collect();
        if ctx.honest(leader) {
            reporters.push(leader);
        }
        let reported: Vec<Key> = reporters
            .iter()
            .flat_map(|&m| self.persisted_by[m].iter().copied())
            .filter(|&(v, s, _)| s == e.slot && v < e.view)
            .collect();
        match reported.iter().map(|k| k.0).max() {
            None => true,
            Some(top) => reported.iter().any(|&(v, _, x)| v == top && x == e.value),
        }
    }

    fn conflicting_pairs(&self) -> impl Iterator<Item = (&Commit, &Commit)> {
        let c = &self.honest_commits;
        (0..c.len()).flat_map(move |i| {
            (i + 1..c.len()).map(move |j| (&c[i], &c[j])).filter(|(x, y)| x.slot == y.slot && x.value != y.value)
        })
    }

    fn exhibits(&self, kind: ViolationKind) -> bool {
        self.conflicting_pairs().any(|(x, y)| {
            let same_view = x.view == y.view;
            let equivocated = self.equivocated.contains(&(x.view, x.slot));
            match kind {
                ViolationKind::SplitBrain => {
                    same_view && !equivocated && self.leaders.get(&x.view).is_some_and(|l| l.len() >= 2)
                }
                ViolationKind::Equivocation => same_view && equivocated,
                ViolationKind::LostCommit => !same_view,
                ViolationKind::Stall => false,
            }
        })
    }

    fn proves_stall(&self, ctx: &Ctx, trace: &[ProtocolEvent], proof: StallProof) -> bool {
        let q = ctx.q;
        match proof {
            StallProof::QuorumUnavailable { required, available } => {
                let needed = q.q_per().max(q.q_vc()).max(q.q_eq().unwrap_or(0));
                let live = ctx.status.iter().filter(|s| **s == NodeStatus::Correct).count();
                required == needed && available == live && available < required
            }
            StallProof::SpuriousViewChanges { view, byzantine, trigger } => {
                let seen = self.byz_requesters.get(&view).map_or(0, BTreeSet::len);
                q.q_vc_t() == Some(trigger) && byzantine == seen && byzantine >= trigger
            }
            StallProof::ViewChangeStarved { view, honest_requests, trigger } => {
                let Some(&at) = self.completed_at.get(&view) else {
                    return false;
                };
                let leader = trace[at].actor;
                let honest_in_cert = self.certificates[&(view, leader)].iter().filter(|&&m| ctx.honest(m)).count();
                // the Byzantine supporters fall silent after the election
                let silent = trace[at + 1..].iter().all(|e| e.kind == EventKind::Stall || ctx.honest(e.actor));
                q.q_vc_t() == Some(trigger) && honest_in_cert == honest_requests && honest_requests < trigger && silent
            }
        }
    }
}
