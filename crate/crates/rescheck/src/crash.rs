//! Crash-stop failure handling: structural validation of crash-handling
//! systems and the augmentation that retrofits crash handling onto an
//! arbitrary system.
//!
//! A process crashes by taking an internal `crash` action and broadcasting
//! the crash symbol over all its outgoing channels before stopping. A
//! system is crash-handling when (CI) every live-state receive from an
//! unreliable sender has a crash-reception alternative, (CP) every live
//! state of an unreliable process starts a complete crash broadcast ending
//! in a stopped state, and (CR) stopped states absorb stray crash symbols
//! from every peer. All three checks are structural, per automaton.

use crate::model::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Internal action tag used for the crash step.
pub const CRASH_TAG: &str = "crash";

/// The set of processes assumed never to crash.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ReliableSet(pub BTreeSet<ProcessId>);

impl ReliableSet {
    pub fn new(members: impl IntoIterator<Item = ProcessId>) -> Self {
        ReliableSet(members.into_iter().collect())
    }

    pub fn contains(&self, p: &ProcessId) -> bool {
        self.0.contains(p)
    }
}

/// Partition tag of a control state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum StateTag {
    Live,
    Stopped,
    Broadcasting,
}

/// State partition of a crash-handling system; transitions partition
/// implicitly into plain ones and crash-related ones (crash symbol or
/// internal actions).
#[derive(Debug, Clone, Default)]
pub struct CrashPartition {
    pub tags: BTreeMap<(ProcessId, StateId), StateTag>,
}

impl CrashPartition {
    pub fn tag(&self, p: &ProcessId, q: &StateId) -> StateTag {
        self.tags.get(&(p.clone(), q.clone())).copied().unwrap_or(StateTag::Live)
    }
}

fn is_crash_related(action: &Action) -> bool {
    match action {
        Action::Internal(..) => true,
        Action::Send(_, m) | Action::Receive(_, m) => m.is_crash(),
    }
}

/// Infers a partition for states without explicit annotations: a state
/// whose outgoing transitions are only crash-reception self-loops and whose
/// other incoming transitions are all crash-related is stopped; a state
/// lying on a broadcast chain (crash-sends out, crash step or crash-sends
/// in) is broadcasting; everything else is live. Explicit annotations win.
pub fn infer_partition(
    s: &System,
    annotations: &BTreeMap<(ProcessId, StateId), StateTag>,
) -> CrashPartition {
    let mut tags = BTreeMap::new();
    for (p, a) in &s.automata {
        for q in &a.states {
            if let Some(t) = annotations.get(&(p.clone(), q.clone())) {
                tags.insert((p.clone(), q.clone()), *t);
                continue;
            }
            let outs: Vec<&Transition> = a.outgoing(q).collect();
            let incoming: Vec<&Transition> =
                a.transitions.iter().filter(|t| &t.to == q && &t.from != q).collect();
            let only_absorb = outs.iter().all(|t| {
                matches!(&t.action, Action::Receive(_, m) if m.is_crash()) && t.to == *q
            });
            let incoming_crashy =
                !incoming.is_empty() && incoming.iter().all(|t| is_crash_related(&t.action));
            let tag = if only_absorb && incoming_crashy {
                StateTag::Stopped
            } else {
                let outs_bcast = !outs.is_empty()
                    && outs.iter().all(
                        |t| matches!(&t.action, Action::Send(_, m) if m.is_crash()),
                    );
                let ins_bcast = !incoming.is_empty()
                    && incoming.iter().all(|t| match &t.action {
                        Action::Internal(_, tag) => tag == CRASH_TAG,
                        Action::Send(_, m) => m.is_crash(),
                        _ => false,
                    });
                if outs_bcast && ins_bcast {
                    StateTag::Broadcasting
                } else {
                    StateTag::Live
                }
            };
            tags.insert((p.clone(), q.clone()), tag);
        }
    }
    CrashPartition { tags }
}

/// One violated crash-handling condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Error)]
pub enum CrashViolation {
    #[error("CI violated: process {process} state {state} receives from unreliable {from} without a crash branch")]
    CrashHandling { process: ProcessId, state: StateId, from: ProcessId },
    #[error("CP violated: process {process} live state {state} has no complete crash broadcast: {reason}")]
    CrashBroadcast { process: ProcessId, state: StateId, reason: String },
    #[error("CR violated: process {process} stopped state {state} lacks a crash-absorption self-loop from {from}")]
    CrashRedundancy { process: ProcessId, state: StateId, from: ProcessId },
    #[error("crash branch at process {process} state {state} can still receive from crashed {from}")]
    CrashBranchReceives { process: ProcessId, state: StateId, from: ProcessId },
}

impl CrashViolation {
    /// Condition label: CI, CP, CR or the branch constraint.
    pub fn condition(&self) -> &'static str {
        match self {
            CrashViolation::CrashHandling { .. } => "CI",
            CrashViolation::CrashBroadcast { .. } => "CP",
            CrashViolation::CrashRedundancy { .. } => "CR",
            CrashViolation::CrashBranchReceives { .. } => "CI-branch",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CrashVerdict {
    pub ok: bool,
    pub violations: Vec<CrashViolation>,
}

/// Searches for a complete crash broadcast from `q`: the internal crash
/// step, then one crash send per peer in any order through broadcasting
/// states, ending in a stopped state. With no peers the crash step may
/// land directly in a stopped state.
fn has_broadcast_chain(
    a: &FifoAutomaton,
    part: &CrashPartition,
    p: &ProcessId,
    q: &StateId,
    peers: &BTreeSet<ProcessId>,
) -> Result<(), String> {
    let starts: Vec<&Transition> = a
        .outgoing(q)
        .filter(|t| matches!(&t.action, Action::Internal(_, tag) if tag == CRASH_TAG))
        .collect();
    if starts.is_empty() {
        return Err("no internal crash step".to_string());
    }
    for start in starts {
        // DFS over crash sends, tracking which peers were covered.
        let mut stack: Vec<(StateId, BTreeSet<ProcessId>)> =
            vec![(start.to.clone(), BTreeSet::new())];
        let mut seen = BTreeSet::new();
        while let Some((cur, covered)) = stack.pop() {
            if covered == *peers && part.tag(p, &cur) == StateTag::Stopped {
                return Ok(());
            }
            if !seen.insert((cur.clone(), covered.clone())) {
                continue;
            }
            for t in a.outgoing(&cur) {
                if let Action::Send(c, m) = &t.action {
                    if m.is_crash() && !covered.contains(&c.receiver) {
                        let mut c2 = covered.clone();
                        c2.insert(c.receiver.clone());
                        stack.push((t.to.clone(), c2));
                    }
                }
            }
        }
    }
    Err(format!("crash step exists but no chain covers all {} peers into a stopped state", peers.len()))
}

/// Structural crash-handling check. The partition comes from explicit
/// annotations where given and is inferred elsewhere.
pub fn is_crash_handling(
    s: &System,
    r: &ReliableSet,
    annotations: &BTreeMap<(ProcessId, StateId), StateTag>,
) -> CrashVerdict {
    let part = infer_partition(s, annotations);
    let mut violations = Vec::new();
    let procs: BTreeSet<ProcessId> = s.automata.keys().cloned().collect();
    for (p, a) in &s.automata {
        let peers: BTreeSet<ProcessId> = procs.iter().filter(|x| *x != p).cloned().collect();
        // CI: crash branch for every live-state receive from an unreliable
        // sender.
        for t in &a.transitions {
            let Action::Receive(c, m) = &t.action else { continue };
            if m.is_crash() || r.contains(&c.sender) {
                continue;
            }
            if part.tag(p, &t.from) != StateTag::Live {
                continue;
            }
            let has_branch = a.outgoing(&t.from).any(|t2| {
                matches!(&t2.action, Action::Receive(c2, m2) if m2.is_crash() && c2.sender == c.sender)
            });
            if !has_branch {
                violations.push(CrashViolation::CrashHandling {
                    process: p.clone(),
                    state: t.from.clone(),
                    from: c.sender.clone(),
                });
            }
        }
        // CP: complete broadcast from every live state of an unreliable
        // process.
        if !r.contains(p) {
            for q in &a.states {
                if part.tag(p, q) != StateTag::Live {
                    continue;
                }
                if let Err(reason) = has_broadcast_chain(a, &part, p, q, &peers) {
                    violations.push(CrashViolation::CrashBroadcast {
                        process: p.clone(),
                        state: q.clone(),
                        reason,
                    });
                }
            }
        }
        // CR: absorption self-loops at stopped states, from every peer.
        for q in &a.states {
            if part.tag(p, q) != StateTag::Stopped {
                continue;
            }
            for peer in &peers {
                let has_loop = a.outgoing(q).any(|t| {
                    matches!(&t.action, Action::Receive(c, m)
                        if m.is_crash() && &c.sender == peer && t.to == *q)
                });
                if !has_loop {
                    violations.push(CrashViolation::CrashRedundancy {
                        process: p.clone(),
                        state: q.clone(),
                        from: peer.clone(),
                    });
                }
            }
        }
        // Crash branches must never receive plain messages from the
        // crashed sender again.
        for t in &a.transitions {
            let Action::Receive(c, m) = &t.action else { continue };
            if !m.is_crash() || part.tag(p, &t.from) != StateTag::Live {
                continue;
            }
            // Reachable subgraph from the branch target.
            let mut stack = vec![t.to.clone()];
            let mut seen = BTreeSet::new();
            while let Some(cur) = stack.pop() {
                if !seen.insert(cur.clone()) {
                    continue;
                }
                for t2 in a.outgoing(&cur) {
                    if let Action::Receive(c2, m2) = &t2.action {
                        if !m2.is_crash() && c2.sender == c.sender {
                            violations.push(CrashViolation::CrashBranchReceives {
                                process: p.clone(),
                                state: t2.from.clone(),
                                from: c.sender.clone(),
                            });
                        }
                    }
                    stack.push(t2.to.clone());
                }
            }
        }
    }
    violations.sort_by_key(|v| format!("{v:?}"));
    violations.dedup();
    CrashVerdict { ok: violations.is_empty(), violations }
}

/// Inserts the crash broadcast shorthand at `from`: the internal crash
/// step, one crash send per peer (in sorted order, through fresh
/// broadcasting states), ending in `stop`. Returns the inserted
/// transitions.
pub fn expand_broadcast(
    a: &mut FifoAutomaton,
    from: &StateId,
    message: &Message,
    peers: &[ProcessId],
    stop: &StateId,
) -> Vec<Transition> {
    let owner = a.owner.clone();
    let mut added = Vec::new();
    let mut peers: Vec<ProcessId> = peers.to_vec();
    peers.sort();
    let mut add = |a: &mut FifoAutomaton, f: StateId, act: Action, t: StateId| {
        a.add(f.clone(), act.clone(), t.clone());
        added.push(Transition { from: f, action: act, to: t });
    };
    if peers.is_empty() {
        add(a, from.clone(), Action::Internal(owner, CRASH_TAG.into()), stop.clone());
        return added;
    }
    let fresh = |i: usize| StateId::new(format!("{}_bc{}", from.0, i));
    add(a, from.clone(), Action::Internal(owner.clone(), CRASH_TAG.into()), fresh(0));
    for (i, peer) in peers.iter().enumerate() {
        let target = if i + 1 == peers.len() { stop.clone() } else { fresh(i + 1) };
        add(
            a,
            fresh(i),
            Action::Send(Channel::new(owner.clone(), peer.clone()), message.clone()),
            target,
        );
    }
    added
}

#[derive(Debug, Clone, Error)]
#[error("system already uses the reserved crash symbol; cannot augment")]
pub struct ReservedCollision;

/// Retrofits crash handling onto a system whose labels avoid the crash
/// symbol: a fresh sink per process absorbs crashes, every receive from an
/// unreliable sender gains a crash branch into the sink, and every state of
/// an unreliable process gains a crash broadcast into the sink. Any
/// k-bounded execution of the input stays at most (k+1)-bounded here.
pub fn augment_crash_handling(s: &System, r: &ReliableSet) -> Result<System, ReservedCollision> {
    for a in s.automata.values() {
        for t in &a.transitions {
            if t.action.message().is_some_and(Message::is_crash) {
                return Err(ReservedCollision);
            }
        }
    }
    let procs: Vec<ProcessId> = s.automata.keys().cloned().collect();
    let mut out = System::new(s.name.clone());
    for (p, a) in &s.automata {
        let mut b = a.clone();
        let original_states: Vec<StateId> = a.states.iter().cloned().collect();
        let peers: Vec<ProcessId> = procs.iter().filter(|x| *x != p).cloned().collect();
        let sink = StateId::new("qsink");
        let needs_ci = a.transitions.iter().any(|t| {
            matches!(&t.action, Action::Receive(c, _) if !r.contains(&c.sender))
        });
        let mut used_sink = false;
        if needs_ci {
            used_sink = true;
            let mut branches: Vec<(StateId, ProcessId)> = Vec::new();
            for t in &a.transitions {
                if let Action::Receive(c, _) = &t.action {
                    if !r.contains(&c.sender) {
                        branches.push((t.from.clone(), c.sender.clone()));
                    }
                }
            }
            branches.sort();
            branches.dedup();
            for (q, sender) in branches {
                b.add(
                    q,
                    Action::Receive(Channel::new(sender, p.clone()), Message::crash()),
                    sink.clone(),
                );
            }
        }
        if !r.contains(p) {
            used_sink = true;
            for q in &original_states {
                expand_broadcast_into(&mut b, q, &peers, &sink);
            }
        }
        if used_sink {
            for peer in &peers {
                b.add(
                    sink.clone(),
                    Action::Receive(Channel::new(peer.clone(), p.clone()), Message::crash()),
                    sink.clone(),
                );
            }
        }
        out.add_automaton(b);
    }
    Ok(out)
}

fn expand_broadcast_into(a: &mut FifoAutomaton, from: &StateId, peers: &[ProcessId], stop: &StateId) {
    expand_broadcast(a, from, &Message::crash(), peers, stop);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn no_annotations() -> BTreeMap<(ProcessId, StateId), StateTag> {
        BTreeMap::new()
    }

    fn fig4a_annotations() -> BTreeMap<(ProcessId, StateId), StateTag> {
        let c = ProcessId::new("c");
        let s = ProcessId::new("s");
        [
            ((c.clone(), StateId::new("c2")), StateTag::Stopped),
            ((c.clone(), StateId::new("c3")), StateTag::Broadcasting),
            ((c, StateId::new("c4")), StateTag::Stopped),
            ((s, StateId::new("s3")), StateTag::Stopped),
        ]
        .into_iter()
        .collect()
    }

    #[test]
    fn fig4a_is_crash_handling() {
        let sys = corpus::fig4a();
        let r = ReliableSet::new([ProcessId::new("s")]);
        let v = is_crash_handling(&sys, &r, &fig4a_annotations());
        assert!(v.ok, "{:?}", v.violations);
    }

    #[test]
    fn all_reliable_is_vacuously_crash_handling() {
        let sys = corpus::fig1();
        let r = ReliableSet::new([ProcessId::new("s"), ProcessId::new("r")]);
        let v = is_crash_handling(&sys, &r, &no_annotations());
        assert!(v.ok, "{:?}", v.violations);
    }

    #[test]
    fn deleting_the_crash_branch_violates_ci() {
        let mut sys = corpus::fig4a();
        let server = sys.automata.get_mut(&ProcessId::new("s")).unwrap();
        server.transitions.retain(|t| {
            !(t.from == StateId::new("s0")
                && matches!(&t.action, Action::Receive(_, m) if m.is_crash()))
        });
        let r = ReliableSet::new([ProcessId::new("s")]);
        let v = is_crash_handling(&sys, &r, &fig4a_annotations());
        assert!(!v.ok);
        assert_eq!(v.violations[0].condition(), "CI");
    }

    #[test]
    fn expand_broadcast_three_processes() {
        let p = ProcessId::new("p");
        let mut a = FifoAutomaton::new(p.clone(), StateId::new("q0"));
        let peers = vec![ProcessId::new("r1"), ProcessId::new("r2")];
        let stop = StateId::new("stop");
        let added =
            expand_broadcast(&mut a, &StateId::new("q0"), &Message::crash(), &peers, &stop);
        assert_eq!(added.len(), 3); // crash + two sends
        assert!(matches!(added[0].action, Action::Internal(..)));
        assert_eq!(added[2].to, stop);
    }

    #[test]
    fn expand_broadcast_single_peer_and_no_peer() {
        let p = ProcessId::new("p");
        let mut a = FifoAutomaton::new(p.clone(), StateId::new("q0"));
        let added = expand_broadcast(
            &mut a,
            &StateId::new("q0"),
            &Message::crash(),
            &[ProcessId::new("q")],
            &StateId::new("stop"),
        );
        assert_eq!(added.len(), 2);
        let mut b = FifoAutomaton::new(p, StateId::new("q0"));
        let added = expand_broadcast(&mut b, &StateId::new("q0"), &Message::crash(), &[], &StateId::new("stop"));
        assert_eq!(added.len(), 1);
        assert!(matches!(added[0].action, Action::Internal(..)));
    }

    #[test]
    fn augment_fig1_validates() {
        let sys = corpus::fig1();
        let r = ReliableSet::new([ProcessId::new("s")]);
        let aug = augment_crash_handling(&sys, &r).unwrap();
        let v = is_crash_handling(&aug, &r, &no_annotations());
        assert!(v.ok, "{:?}", v.violations);
    }

    #[test]
    fn augment_with_all_reliable_is_identity() {
        let sys = corpus::fig1();
        let r = ReliableSet::new([ProcessId::new("s"), ProcessId::new("r")]);
        let aug = augment_crash_handling(&sys, &r).unwrap();
        assert_eq!(aug, sys);
    }

    #[test]
    fn augment_fig3_adds_full_chains() {
        let sys = corpus::fig3();
        let r = ReliableSet::default();
        let aug = augment_crash_handling(&sys, &r).unwrap();
        let v = is_crash_handling(&aug, &r, &no_annotations());
        assert!(v.ok, "{:?}", v.violations);
        // Every original state gained one internal crash step plus three
        // crash sends (chains are per-state).
        for (p, a) in &sys.automata {
            let b = &aug.automata[p];
            let crash_steps = b
                .transitions
                .iter()
                .filter(|t| matches!(&t.action, Action::Internal(_, tag) if tag == CRASH_TAG))
                .count();
            assert_eq!(crash_steps, a.states.len());
            let crash_sends = b
                .transitions
                .iter()
                .filter(|t| matches!(&t.action, Action::Send(_, m) if m.is_crash()))
                .count();
            assert_eq!(crash_sends, 3 * a.states.len());
        }
    }

    #[test]
    fn augment_rejects_reserved_symbol() {
        let sys = corpus::fig4a(); // already contains crash labels
        let r = ReliableSet::new([ProcessId::new("s")]);
        assert!(augment_crash_handling(&sys, &r).is_err());
    }
}
