//! Processes, channels, actions, FIFO automata and systems.
//!
//! A system is a finite family of FIFO automata, one per process,
//! communicating over unidirectional point-to-point channels. There are no
//! final or accepting states; the unit of analysis is the reachable
//! configuration (a global control-state vector plus per-channel queue
//! contents).

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// Reserved message label for the crash notification symbol.
///
/// It may not appear as an ordinary protocol message; crash-handling
/// machinery introduces it explicitly.
pub const CRASH_LABEL: &str = "CRASH";

/// Name of a process. Unique within a system.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProcessId(pub String);

impl ProcessId {
    pub fn new(name: impl Into<String>) -> Self {
        ProcessId(name.into())
    }
}

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A unidirectional point-to-point link from `sender` to `receiver`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Channel {
    pub sender: ProcessId,
    pub receiver: ProcessId,
}

impl Channel {
    pub fn new(sender: ProcessId, receiver: ProcessId) -> Self {
        Channel { sender, receiver }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}>{}", self.sender, self.receiver)
    }
}

/// A message: a label plus an optional payload-sort tag.
///
/// Equality is by `(label, sort)`; an absent sort behaves as a unit sort.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Message {
    pub label: String,
    pub sort: Option<String>,
}

impl Message {
    pub fn new(label: impl Into<String>) -> Self {
        Message { label: label.into(), sort: None }
    }

    pub fn with_sort(label: impl Into<String>, sort: impl Into<String>) -> Self {
        Message { label: label.into(), sort: Some(sort.into()) }
    }

    /// The crash notification message.
    pub fn crash() -> Self {
        Message::new(CRASH_LABEL)
    }

    pub fn is_crash(&self) -> bool {
        self.label == CRASH_LABEL
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.sort {
            Some(s) => write!(f, "{}/{}", self.label, s),
            None => write!(f, "{}", self.label),
        }
    }
}

/// Local control-state identifier, scoped to one automaton.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateId(pub String);

impl StateId {
    pub fn new(name: impl Into<String>) -> Self {
        StateId(name.into())
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A transition label: send, receive, or an internal action local to one
/// process.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    Send(Channel, Message),
    Receive(Channel, Message),
    Internal(ProcessId, String),
}

impl Action {
    /// The process that performs the action: the sender of a send, the
    /// receiver of a receive, the owner of an internal action.
    pub fn active_process(&self) -> &ProcessId {
        match self {
            Action::Send(c, _) => &c.sender,
            Action::Receive(c, _) => &c.receiver,
            Action::Internal(p, _) => p,
        }
    }

    pub fn channel(&self) -> Option<&Channel> {
        match self {
            Action::Send(c, _) | Action::Receive(c, _) => Some(c),
            Action::Internal(..) => None,
        }
    }

    pub fn message(&self) -> Option<&Message> {
        match self {
            Action::Send(_, m) | Action::Receive(_, m) => Some(m),
            Action::Internal(..) => None,
        }
    }

    pub fn is_send(&self) -> bool {
        matches!(self, Action::Send(..))
    }

    pub fn is_receive(&self) -> bool {
        matches!(self, Action::Receive(..))
    }

    pub fn is_internal(&self) -> bool {
        matches!(self, Action::Internal(..))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Send(c, m) => write!(f, "{}!{}", c, m),
            Action::Receive(c, m) => write!(f, "{}?{}", c, m),
            Action::Internal(p, tag) => write!(f, "tau {} {}", p, tag),
        }
    }
}

/// One transition of a FIFO automaton.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub from: StateId,
    pub action: Action,
    pub to: StateId,
}

/// A FIFO automaton: the behaviour of a single process.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FifoAutomaton {
    pub owner: ProcessId,
    pub states: BTreeSet<StateId>,
    pub initial: StateId,
    pub transitions: Vec<Transition>,
}

impl FifoAutomaton {
    pub fn new(owner: ProcessId, initial: StateId) -> Self {
        let mut states = BTreeSet::new();
        states.insert(initial.clone());
        FifoAutomaton { owner, states, initial, transitions: Vec::new() }
    }

    /// Adds a transition, registering both endpoint states. Exact
    /// duplicates are dropped.
    pub fn add(&mut self, from: StateId, action: Action, to: StateId) {
        self.states.insert(from.clone());
        self.states.insert(to.clone());
        let t = Transition { from, action, to };
        if !self.transitions.contains(&t) {
            self.transitions.push(t);
        }
    }

    pub fn outgoing(&self, q: &StateId) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(move |t| &t.from == q)
    }

    /// `true` iff equal actions from equal states always lead to the same
    /// target.
    pub fn is_deterministic(&self) -> bool {
        let mut seen: BTreeMap<(&StateId, &Action), &StateId> = BTreeMap::new();
        for t in &self.transitions {
            if let Some(prev) = seen.insert((&t.from, &t.action), &t.to) {
                if prev != &t.to {
                    return false;
                }
            }
        }
        true
    }
}

/// Classification of a local control-state.
///
/// Internal actions are neutral: a state whose communication transitions are
/// all sends is `Sending` even if it also offers internal actions. A state
/// with no outgoing transitions at all is `Sink`. A state that mixes sends
/// and receives, or that has outgoing transitions but no communication at
/// all, is `Mixed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateKind {
    Sending,
    Receiving,
    Mixed,
    Sink,
}

/// Result of classifying one state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateClass {
    pub kind: StateKind,
    /// Only meaningful for `Sending`/`Receiving`: all communication from the
    /// state involves a single peer process.
    pub directed: bool,
}

/// A family of FIFO automata indexed by process.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct System {
    pub name: String,
    pub automata: BTreeMap<ProcessId, FifoAutomaton>,
}

/// A global configuration: one control state per process plus the contents
/// of every channel.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    pub states: BTreeMap<ProcessId, StateId>,
    pub channels: BTreeMap<Channel, Vec<Message>>,
}

/// A violation found while validating a system description.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("process {0}: channel {1} names unknown process")]
    UnknownProcess(ProcessId, Channel),
    #[error("channel {0} violates sender != receiver")]
    SelfChannel(Channel),
    #[error("process {owner}: send on {channel} not owned by {owner}")]
    SendNotOwned { owner: ProcessId, channel: Channel },
    #[error("process {owner}: receive on {channel} not owned by {owner}")]
    ReceiveNotOwned { owner: ProcessId, channel: Channel },
    #[error("process {owner}: internal action attributed to {other}")]
    ForeignInternal { owner: ProcessId, other: ProcessId },
    #[error("process {0}: reserved crash symbol used as a message label")]
    ReservedCrashLabel(ProcessId),
    #[error("process {0}: empty identifier")]
    EmptyIdentifier(ProcessId),
    #[error("automaton keyed {key} has owner field {owner}")]
    OwnerMismatch { key: ProcessId, owner: ProcessId },
    #[error("duplicate process {0}")]
    DuplicateProcess(ProcessId),
}

impl System {
    pub fn new(name: impl Into<String>) -> Self {
        System { name: name.into(), automata: BTreeMap::new() }
    }

    pub fn add_automaton(&mut self, a: FifoAutomaton) {
        self.automata.insert(a.owner.clone(), a);
    }

    pub fn processes(&self) -> impl Iterator<Item = &ProcessId> {
        self.automata.keys()
    }

    /// The full peer-to-peer channel set derived from the process set.
    pub fn channels(&self) -> Vec<Channel> {
        let procs: Vec<_> = self.automata.keys().cloned().collect();
        let mut out = Vec::new();
        for s in &procs {
            for r in &procs {
                if s != r {
                    out.push(Channel::new(s.clone(), r.clone()));
                }
            }
        }
        out
    }

    /// The message alphabet: every message occurring on a transition.
    pub fn alphabet(&self) -> BTreeSet<Message> {
        let mut out = BTreeSet::new();
        for a in self.automata.values() {
            for t in &a.transitions {
                if let Some(m) = t.action.message() {
                    out.insert(m.clone());
                }
            }
        }
        out
    }

    /// The set of distinct actions occurring in the system's transitions.
    pub fn actions(&self) -> BTreeSet<Action> {
        let mut out = BTreeSet::new();
        for a in self.automata.values() {
            for t in &a.transitions {
                out.insert(t.action.clone());
            }
        }
        out
    }

    /// The initial configuration: all automata at their initial state, all
    /// channels empty.
    pub fn initial_configuration(&self) -> Configuration {
        Configuration {
            states: self
                .automata
                .iter()
                .map(|(p, a)| (p.clone(), a.initial.clone()))
                .collect(),
            channels: self.channels().into_iter().map(|c| (c, Vec::new())).collect(),
        }
    }

    /// Checks every structural invariant, collecting the complete list of
    /// violations. `allow_crash` admits the reserved crash label (used by
    /// crash-handling system files).
    pub fn validate_with(&self, allow_crash: bool) -> Result<(), Vec<ValidationError>> {
        let mut errs = Vec::new();
        for (key, a) in &self.automata {
            if key != &a.owner {
                errs.push(ValidationError::OwnerMismatch { key: key.clone(), owner: a.owner.clone() });
            }
            if key.0.is_empty() {
                errs.push(ValidationError::EmptyIdentifier(key.clone()));
            }
            for t in &a.transitions {
                match &t.action {
                    Action::Send(c, m) => {
                        self.check_channel(&a.owner, c, &mut errs);
                        if c.sender != a.owner {
                            errs.push(ValidationError::SendNotOwned { owner: a.owner.clone(), channel: c.clone() });
                        }
                        if !allow_crash && m.is_crash() {
                            errs.push(ValidationError::ReservedCrashLabel(a.owner.clone()));
                        }
                        if m.label.is_empty() {
                            errs.push(ValidationError::EmptyIdentifier(a.owner.clone()));
                        }
                    }
                    Action::Receive(c, m) => {
                        self.check_channel(&a.owner, c, &mut errs);
                        if c.receiver != a.owner {
                            errs.push(ValidationError::ReceiveNotOwned { owner: a.owner.clone(), channel: c.clone() });
                        }
                        if !allow_crash && m.is_crash() {
                            errs.push(ValidationError::ReservedCrashLabel(a.owner.clone()));
                        }
                        if m.label.is_empty() {
                            errs.push(ValidationError::EmptyIdentifier(a.owner.clone()));
                        }
                    }
                    Action::Internal(p, _) => {
                        if p != &a.owner {
                            errs.push(ValidationError::ForeignInternal { owner: a.owner.clone(), other: p.clone() });
                        }
                    }
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// `validate_with(false)`: rejects the reserved crash label.
    pub fn validate(&self) -> Result<(), Vec<ValidationError>> {
        self.validate_with(false)
    }

    fn check_channel(&self, _owner: &ProcessId, c: &Channel, errs: &mut Vec<ValidationError>) {
        if c.sender == c.receiver {
            errs.push(ValidationError::SelfChannel(c.clone()));
        }
        for end in [&c.sender, &c.receiver] {
            if !self.automata.contains_key(end) {
                errs.push(ValidationError::UnknownProcess(end.clone(), c.clone()));
            }
        }
    }
}

/// Classifies state `q` of automaton `a`.
pub fn classify_state(a: &FifoAutomaton, q: &StateId) -> Result<StateClass, UnknownState> {
    if !a.states.contains(q) {
        return Err(UnknownState(q.clone()));
    }
    let outs: Vec<&Transition> = a.outgoing(q).collect();
    if outs.is_empty() {
        return Ok(StateClass { kind: StateKind::Sink, directed: false });
    }
    let sends: Vec<&Channel> = outs
        .iter()
        .filter_map(|t| match &t.action {
            Action::Send(c, _) => Some(c),
            _ => None,
        })
        .collect();
    let recvs: Vec<&Channel> = outs
        .iter()
        .filter_map(|t| match &t.action {
            Action::Receive(c, _) => Some(c),
            _ => None,
        })
        .collect();
    let kind = match (!sends.is_empty(), !recvs.is_empty()) {
        (true, false) => StateKind::Sending,
        (false, true) => StateKind::Receiving,
        _ => StateKind::Mixed,
    };
    let directed = match kind {
        StateKind::Sending => sends.windows(2).all(|w| w[0].receiver == w[1].receiver),
        StateKind::Receiving => recvs.windows(2).all(|w| w[0].sender == w[1].sender),
        _ => false,
    };
    Ok(StateClass { kind, directed })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown state id {0}")]
pub struct UnknownState(pub StateId);

/// Per-state diagnostics from the communicating-session-automata check.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CsaDiagnostics {
    /// States offering both a send and a receive.
    pub mixed_states: Vec<(ProcessId, StateId)>,
    /// States where two equal actions lead to different targets.
    pub nondeterministic_states: Vec<(ProcessId, StateId)>,
    /// Sink states; reported but not a CSA failure.
    pub sink_states: Vec<(ProcessId, StateId)>,
}

/// Decides whether every automaton is deterministic and free of mixed
/// states. Sink states are exempt from the mixed-state rule and internal
/// actions are neutral, so crash-handling systems stay inside the class.
pub fn is_csa(s: &System) -> (bool, CsaDiagnostics) {
    let mut diag = CsaDiagnostics::default();
    for (p, a) in &s.automata {
        let mut seen: BTreeMap<(&StateId, &Action), &StateId> = BTreeMap::new();
        for t in &a.transitions {
            if let Some(prev) = seen.insert((&t.from, &t.action), &t.to) {
                if prev != &t.to {
                    diag.nondeterministic_states.push((p.clone(), t.from.clone()));
                }
            }
        }
        for q in &a.states {
            let class = classify_state(a, q).expect("state is in the automaton");
            match class.kind {
                StateKind::Sink => diag.sink_states.push((p.clone(), q.clone())),
                StateKind::Mixed => {
                    let has_send = a.outgoing(q).any(|t| t.action.is_send());
                    let has_recv = a.outgoing(q).any(|t| t.action.is_receive());
                    if has_send && has_recv {
                        diag.mixed_states.push((p.clone(), q.clone()));
                    }
                }
                _ => {}
            }
        }
    }
    diag.nondeterministic_states.dedup();
    let ok = diag.mixed_states.is_empty() && diag.nondeterministic_states.is_empty();
    (ok, diag)
}

/// A control-state vector of the asynchronous product, by process order of
/// the system's process set.
pub type GlobalState = Vec<StateId>;

/// Lazily expanded asynchronous product of a system's automata.
///
/// States are control vectors only; channel contents are not part of the
/// product. Expansion is on demand so checkers can walk the product without
/// materializing it.
pub struct ProductGraph<'a> {
    system: &'a System,
    procs: Vec<&'a ProcessId>,
}

impl<'a> ProductGraph<'a> {
    pub fn new(system: &'a System) -> Self {
        ProductGraph { system, procs: system.automata.keys().collect() }
    }

    pub fn initial(&self) -> GlobalState {
        self.procs.iter().map(|p| self.system.automata[*p].initial.clone()).collect()
    }

    /// All product transitions from `q`: exactly one component moves.
    pub fn successors(&self, q: &GlobalState) -> Vec<(Action, GlobalState)> {
        let mut out = Vec::new();
        for (i, p) in self.procs.iter().enumerate() {
            let a = &self.system.automata[*p];
            for t in a.outgoing(&q[i]) {
                let mut q2 = q.clone();
                q2[i] = t.to.clone();
                out.push((t.action.clone(), q2));
            }
        }
        out
    }

    /// Total number of control vectors (cartesian product cardinality).
    pub fn state_space_size(&self) -> u128 {
        self.procs.iter().map(|p| self.system.automata[*p].states.len() as u128).product()
    }

    /// Materializes the full product (all control vectors, reachable or
    /// not), failing when the state count exceeds `cap`.
    pub fn materialize(&self, cap: usize) -> Result<MaterializedProduct, ProductCapExceeded> {
        let size = self.state_space_size();
        if size > cap as u128 {
            return Err(ProductCapExceeded { size, cap });
        }
        let mut states = vec![Vec::new()];
        for p in &self.procs {
            let a = &self.system.automata[*p];
            let mut next = Vec::with_capacity(states.len() * a.states.len());
            for st in &states {
                for q in &a.states {
                    let mut s2: Vec<StateId> = st.clone();
                    s2.push(q.clone());
                    next.push(s2);
                }
            }
            states = next;
        }
        let mut transitions = Vec::new();
        for q in &states {
            for (act, q2) in self.successors(q) {
                transitions.push((q.clone(), act, q2));
            }
        }
        Ok(MaterializedProduct { states, transitions })
    }
}

/// Fully expanded product automaton.
pub struct MaterializedProduct {
    pub states: Vec<GlobalState>,
    pub transitions: Vec<(GlobalState, Action, GlobalState)>,
}

#[derive(Debug, Clone, Error)]
#[error("product state space has {size} states, above the cap of {cap}")]
pub struct ProductCapExceeded {
    pub size: u128,
    pub cap: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn fig1_description_is_valid() {
        let s = corpus::fig1();
        assert!(s.validate().is_ok());
        assert_eq!(s.automata.len(), 2);
        assert_eq!(s.channels().len(), 2);
    }

    #[test]
    fn self_channel_is_rejected() {
        let p = ProcessId::new("p");
        let mut a = FifoAutomaton::new(p.clone(), StateId::new("q0"));
        a.add(
            StateId::new("q0"),
            Action::Send(Channel::new(p.clone(), p.clone()), Message::new("m")),
            StateId::new("q1"),
        );
        let mut s = System::new("selfloop");
        s.add_automaton(a);
        let errs = s.validate().unwrap_err();
        assert!(errs.iter().any(|e| matches!(e, ValidationError::SelfChannel(_))));
    }

    #[test]
    fn reserved_crash_label_is_rejected() {
        let p = ProcessId::new("p");
        let q = ProcessId::new("q");
        let mut a = FifoAutomaton::new(p.clone(), StateId::new("q0"));
        a.add(
            StateId::new("q0"),
            Action::Send(Channel::new(p.clone(), q.clone()), Message::crash()),
            StateId::new("q1"),
        );
        let mut s = System::new("crashlabel");
        s.add_automaton(a);
        s.add_automaton(FifoAutomaton::new(q, StateId::new("r0")));
        let errs = s.validate().unwrap_err();
        assert!(errs.iter().any(|e| matches!(e, ValidationError::ReservedCrashLabel(_))));
        assert!(s.validate_with(true).is_ok());
    }

    #[test]
    fn classify_fig3_initial_is_sending_directed() {
        let s = corpus::fig3();
        let a = &s.automata[&ProcessId::new("s")];
        let c = classify_state(a, &a.initial).unwrap();
        assert_eq!(c.kind, StateKind::Sending);
        assert!(c.directed);
    }

    #[test]
    fn classify_mixed_state() {
        let p = ProcessId::new("p");
        let q = ProcessId::new("q");
        let mut a = FifoAutomaton::new(p.clone(), StateId::new("q0"));
        a.add(
            StateId::new("q0"),
            Action::Send(Channel::new(p.clone(), q.clone()), Message::new("a")),
            StateId::new("q1"),
        );
        a.add(
            StateId::new("q0"),
            Action::Receive(Channel::new(q.clone(), p.clone()), Message::new("b")),
            StateId::new("q2"),
        );
        let c = classify_state(&a, &StateId::new("q0")).unwrap();
        assert_eq!(c.kind, StateKind::Mixed);
        assert!(classify_state(&a, &StateId::new("zz")).is_err());
    }

    #[test]
    fn classify_sink_state() {
        // Server state after res is sent in the crash-handling example: no
        // outgoing transitions.
        let s = corpus::fig4a();
        let a = &s.automata[&ProcessId::new("s")];
        let c = classify_state(a, &StateId::new("s2")).unwrap();
        assert_eq!(c.kind, StateKind::Sink);
    }

    #[test]
    fn fig3_is_csa() {
        let (ok, diag) = is_csa(&corpus::fig3());
        assert!(ok, "{diag:?}");
    }

    #[test]
    fn nondeterminism_fails_csa() {
        let p = ProcessId::new("p");
        let q = ProcessId::new("q");
        let mut a = FifoAutomaton::new(p.clone(), StateId::new("q0"));
        let act = Action::Send(Channel::new(p.clone(), q.clone()), Message::new("a"));
        a.add(StateId::new("q0"), act.clone(), StateId::new("q1"));
        a.add(StateId::new("q0"), act, StateId::new("q2"));
        let mut s = System::new("nondet");
        s.add_automaton(a);
        s.add_automaton(FifoAutomaton::new(q, StateId::new("r0")));
        let (ok, diag) = is_csa(&s);
        assert!(!ok);
        assert_eq!(diag.nondeterministic_states[0].1, StateId::new("q0"));
    }

    #[test]
    fn fig1_is_not_csa_sender_initial_is_mixed() {
        // The sender's initial state offers both the start send and the err
        // receive, so the system sits outside the session-automata class.
        let (ok, diag) = is_csa(&corpus::fig1());
        assert!(!ok);
        assert!(diag
            .mixed_states
            .iter()
            .any(|(p, q)| p == &ProcessId::new("s") && q == &StateId::new("s0")));
    }

    #[test]
    fn product_cardinality() {
        let p = ProcessId::new("p");
        let q = ProcessId::new("q");
        let mut ap = FifoAutomaton::new(p.clone(), StateId::new("a0"));
        ap.add(
            StateId::new("a0"),
            Action::Send(Channel::new(p.clone(), q.clone()), Message::new("m")),
            StateId::new("a1"),
        );
        let mut aq = FifoAutomaton::new(q.clone(), StateId::new("b0"));
        aq.add(
            StateId::new("b0"),
            Action::Receive(Channel::new(p.clone(), q.clone()), Message::new("m")),
            StateId::new("b1"),
        );
        aq.add(
            StateId::new("b1"),
            Action::Internal(q.clone(), "t".into()),
            StateId::new("b2"),
        );
        let mut s = System::new("two");
        s.add_automaton(ap);
        s.add_automaton(aq);
        let g = ProductGraph::new(&s);
        assert_eq!(g.state_space_size(), 6);
        let m = g.materialize(100).unwrap();
        assert_eq!(m.states.len(), 6);
    }

    #[test]
    fn fig1_product_has_16_control_vectors() {
        let s = corpus::fig1();
        let g = ProductGraph::new(&s);
        assert_eq!(g.state_space_size(), 16);
        assert!(g.materialize(10).is_err());
    }

    #[test]
    fn single_process_product_is_isomorphic() {
        let p = ProcessId::new("p");
        let mut a = FifoAutomaton::new(p.clone(), StateId::new("q0"));
        a.add(StateId::new("q0"), Action::Internal(p.clone(), "t".into()), StateId::new("q1"));
        let mut s = System::new("one");
        s.add_automaton(a);
        let g = ProductGraph::new(&s);
        let m = g.materialize(10).unwrap();
        assert_eq!(m.states.len(), 2);
        assert_eq!(m.transitions.len(), 1);
    }

    #[test]
    fn product_transition_count_formula() {
        // Fully materialized, the transition count is the sum over processes
        // of (component transitions x product of other components' sizes).
        let s = corpus::fig3();
        let g = ProductGraph::new(&s);
        let m = g.materialize(100_000).unwrap();
        let sizes: Vec<usize> = s.automata.values().map(|a| a.states.len()).collect();
        let total: usize = s
            .automata
            .values()
            .enumerate()
            .map(|(i, a)| {
                let others: usize = sizes
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, n)| *n)
                    .product();
                a.transitions.len() * others
            })
            .sum();
        assert_eq!(m.transitions.len(), total);
    }
}
