//! Synchronous realizability under interference.
//!
//! An execution paired with a valid communication (a partition of its
//! indices into matching pairs and unmatched sends) is realizable with
//! synchronous communication when it can be reordered so every matched send
//! is immediately followed by its receive; equivalently, when its conflict
//! graph is acyclic. A system belongs to the class when this holds for
//! every execution and every valid communication.
//!
//! The system-level decision intersects two finite automata over composite
//! interaction symbols: one accepting executions that consist of an
//! synchronously-realizable prefix followed by a single receive, the other
//! accepting words whose interactions close a conflict-graph cycle through
//! that final receive (minimal counter-examples). The system is in the
//! class iff the intersection is empty.

use crate::interference::{CAct, Compiled, Execution, InterferenceMode, Limits, ResourceError};
use crate::model::{Action, Channel, Message, ProcessId, System};
use crate::nfa::Nfa;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::time::Instant;
use thiserror::Error;

// ---------------------------------------------------------------------------
// Interactions, communications, conflict graphs
// ---------------------------------------------------------------------------

/// One interaction of an execution: a matching pair or an unmatched send.
/// Indices are 1-based, matching the usual presentation of executions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Interaction {
    Pair { send: usize, recv: usize },
    Unmatched { send: usize },
}

impl Interaction {
    pub fn indices(&self) -> Vec<usize> {
        match self {
            Interaction::Pair { send, recv } => vec![*send, *recv],
            Interaction::Unmatched { send } => vec![*send],
        }
    }

    pub fn min_index(&self) -> usize {
        match self {
            Interaction::Pair { send, .. } | Interaction::Unmatched { send } => *send,
        }
    }
}

/// A partition of an execution's indices into interactions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CommunicationSet(pub Vec<Interaction>);

impl CommunicationSet {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().filter_map(|i| match i {
            Interaction::Pair { send, recv } => Some((*send, *recv)),
            _ => None,
        })
    }
}

/// Directed conflict graph over the interactions of `(e, C)`.
#[derive(Debug, Clone, Serialize)]
pub struct ConflictGraph {
    pub vertices: Vec<Interaction>,
    /// Edges as vertex-index pairs into `vertices`.
    pub edges: BTreeSet<(usize, usize)>,
}

impl ConflictGraph {
    pub fn is_acyclic(&self) -> bool {
        // Iterative three-colour DFS.
        let n = self.vertices.len();
        let mut adj = vec![Vec::new(); n];
        for (a, b) in &self.edges {
            adj[*a].push(*b);
        }
        let mut colour = vec![0u8; n];
        for start in 0..n {
            if colour[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            colour[start] = 1;
            while let Some(&mut (v, ref mut i)) = stack.last_mut() {
                if *i < adj[v].len() {
                    let w = adj[v][*i];
                    *i += 1;
                    match colour[w] {
                        0 => {
                            colour[w] = 1;
                            stack.push((w, 0));
                        }
                        1 => return false,
                        _ => {}
                    }
                } else {
                    colour[v] = 2;
                    stack.pop();
                }
            }
        }
        true
    }
}

/// Send/receive ordinals per channel: `a_j` is the k-th send (receive) on
/// its channel. Returns (channel, ordinal) for each index, 1-based.
fn ordinals(e: &Execution) -> Vec<Option<(Channel, usize, bool)>> {
    let mut send_count: BTreeMap<Channel, usize> = BTreeMap::new();
    let mut recv_count: BTreeMap<Channel, usize> = BTreeMap::new();
    e.0.iter()
        .map(|a| match a {
            Action::Send(c, _) => {
                let k = send_count.entry(c.clone()).or_insert(0);
                *k += 1;
                Some((c.clone(), *k, true))
            }
            Action::Receive(c, _) => {
                let k = recv_count.entry(c.clone()).or_insert(0);
                *k += 1;
                Some((c.clone(), *k, false))
            }
            Action::Internal(..) => None,
        })
        .collect()
}

/// Whether messages and ordinals are admissible for a pair under the mode.
fn pair_admissible(
    mode: InterferenceMode,
    sent: &Message,
    received: &Message,
    k_send: usize,
    k_recv: usize,
) -> bool {
    let messages_ok = if mode.corrupt { true } else { sent == received };
    let ordinals_ok = if mode.ooo {
        true
    } else if mode.lossy {
        k_recv <= k_send
    } else {
        k_recv == k_send
    };
    messages_ok && ordinals_ok
}

/// All index pairs `{j, j'}` forming a matching pair admissible under the
/// mode: a send and a later receive on the same channel whose messages and
/// per-channel ordinals the mode's axioms can reconcile.
pub fn matching_pairs(e: &Execution, mode: InterferenceMode) -> Vec<Interaction> {
    let ords = ordinals(e);
    let mut out = Vec::new();
    for j in 1..=e.len() {
        let Some((cj, kj, true)) = ords[j - 1].clone() else { continue };
        let Action::Send(_, sent) = e.at(j) else { continue };
        for j2 in j + 1..=e.len() {
            let Some((c2, k2, false)) = ords[j2 - 1].clone() else { continue };
            if c2 != cj {
                continue;
            }
            let Action::Receive(_, received) = e.at(j2) else { continue };
            if pair_admissible(mode, sent, received, kj, k2) {
                out.push(Interaction::Pair { send: j, recv: j2 });
            }
        }
    }
    out
}

/// Whether a pair is perfect: same message and same ordinal.
pub fn is_perfect_pair(e: &Execution, send: usize, recv: usize) -> bool {
    let ords = ordinals(e);
    match (&ords[send - 1], &ords[recv - 1]) {
        (Some((c1, k1, true)), Some((c2, k2, false))) => {
            c1 == c2 && k1 == k2 && e.at(send).message() == e.at(recv).message()
        }
        _ => false,
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("uncoverable receive at index {index}: no admissible matching send")]
pub struct UncoverableReceive {
    pub index: usize,
}

/// All valid communications of `e` under the mode: every partition of the
/// indices into admissible pairs and unmatched sends. Internal actions
/// belong to no interaction and are skipped. Errors when some receive has
/// no admissible matching send at all.
pub fn valid_communications(
    e: &Execution,
    mode: InterferenceMode,
) -> Result<Vec<CommunicationSet>, UncoverableReceive> {
    let pairs = matching_pairs(e, mode);
    let mut by_recv: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for p in &pairs {
        if let Interaction::Pair { send, recv } = p {
            by_recv.entry(*recv).or_default().push(*send);
        }
    }
    let receives: Vec<usize> =
        (1..=e.len()).filter(|j| e.at(*j).is_receive()).collect();
    for r in &receives {
        if !by_recv.contains_key(r) {
            return Err(UncoverableReceive { index: *r });
        }
    }
    let sends: Vec<usize> = (1..=e.len()).filter(|j| e.at(*j).is_send()).collect();
    let mut out = Vec::new();
    let mut assignment: BTreeMap<usize, usize> = BTreeMap::new();
    fn assign(
        ri: usize,
        receives: &[usize],
        by_recv: &BTreeMap<usize, Vec<usize>>,
        used: &mut BTreeSet<usize>,
        assignment: &mut BTreeMap<usize, usize>,
        sends: &[usize],
        out: &mut Vec<CommunicationSet>,
    ) {
        if ri == receives.len() {
            let mut inter: Vec<Interaction> = assignment
                .iter()
                .map(|(r, s)| Interaction::Pair { send: *s, recv: *r })
                .collect();
            for s in sends {
                if !used.contains(s) {
                    inter.push(Interaction::Unmatched { send: *s });
                }
            }
            inter.sort();
            out.push(CommunicationSet(inter));
            return;
        }
        let r = receives[ri];
        for s in &by_recv[&r] {
            if used.insert(*s) {
                assignment.insert(r, *s);
                assign(ri + 1, receives, by_recv, used, assignment, sends, out);
                assignment.remove(&r);
                used.remove(s);
            }
        }
    }
    let mut used = BTreeSet::new();
    assign(0, &receives, &by_recv, &mut used, &mut assignment, &sends, &mut out);
    out.sort();
    out.dedup();
    Ok(out)
}

/// The conflict graph of `(e, C)`: an edge from interaction `X1` to `X2`
/// whenever some index of `X1` precedes some index of `X2` and the two
/// actions do not commute (same active process, or they form a pair of
/// `C`). Edges inside a single interaction are not represented.
pub fn conflict_graph(e: &Execution, c: &CommunicationSet) -> ConflictGraph {
    let vertices = c.0.clone();
    let mut edges = BTreeSet::new();
    for (vi, x1) in vertices.iter().enumerate() {
        for (wi, x2) in vertices.iter().enumerate() {
            if vi == wi {
                continue;
            }
            'search: for &j1 in &x1.indices() {
                for &j2 in &x2.indices() {
                    if j1 < j2 && e.at(j1).active_process() == e.at(j2).active_process() {
                        edges.insert((vi, wi));
                        break 'search;
                    }
                }
            }
        }
    }
    ConflictGraph { vertices, edges }
}

/// Whether every pair of `C` is adjacent (`{j, j+1}`) in `e` itself.
pub fn is_irsc_execution(e: &Execution, c: &CommunicationSet) -> bool {
    let _ = e;
    c.pairs().all(|(s, r)| r == s + 1)
}

/// Whether `(e, C)` is causally equivalent to a synchronously-realizable
/// execution: the conflict graph is acyclic.
pub fn is_irsc_equivalent(e: &Execution, c: &CommunicationSet) -> bool {
    conflict_graph(e, c).is_acyclic()
}

// ---------------------------------------------------------------------------
// Composite interaction symbols
// ---------------------------------------------------------------------------

/// Alphabet of the realizability automata: matched send/receive pairs,
/// lone sends, internal actions, and the terminating receive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum CompositeSymbol {
    Matched { channel: Channel, sent: Message, received: Message },
    LoneSend { channel: Channel, message: Message },
    Internal { process: ProcessId, tag: String },
    FinalReceive { channel: Channel, message: Message },
}

impl CompositeSymbol {
    /// Expansion into concrete actions.
    pub fn actions(&self) -> Vec<Action> {
        match self {
            CompositeSymbol::Matched { channel, sent, received } => vec![
                Action::Send(channel.clone(), sent.clone()),
                Action::Receive(channel.clone(), received.clone()),
            ],
            CompositeSymbol::LoneSend { channel, message } => {
                vec![Action::Send(channel.clone(), message.clone())]
            }
            CompositeSymbol::Internal { process, tag } => {
                vec![Action::Internal(process.clone(), tag.clone())]
            }
            CompositeSymbol::FinalReceive { channel, message } => {
                vec![Action::Receive(channel.clone(), message.clone())]
            }
        }
    }
}

/// Decodes a word over composite symbols into a flat execution.
pub fn decode_word(word: &[CompositeSymbol]) -> Execution {
    Execution(word.iter().flat_map(|s| s.actions()).collect())
}

// Compiled composite symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum KSym {
    M { ch: u16, ms: u16, mr: u16 },
    L { ch: u16, m: u16 },
    T { p: u16, tag: u16 },
    F { ch: u16, m: u16 },
}

impl KSym {
    fn channel(&self) -> Option<u16> {
        match self {
            KSym::M { ch, .. } | KSym::L { ch, .. } | KSym::F { ch, .. } => Some(*ch),
            KSym::T { .. } => None,
        }
    }

    fn is_nr(&self) -> bool {
        !matches!(self, KSym::F { .. })
    }

    /// Active processes of the interaction the symbol denotes.
    fn procs(&self, cc: &Compiled) -> (u16, Option<u16>) {
        match self {
            KSym::M { ch, .. } => {
                let (s, r) = cc.channels[*ch as usize];
                (s, Some(r))
            }
            KSym::L { ch, .. } => (cc.channels[*ch as usize].0, None),
            KSym::T { p, .. } => (*p, None),
            KSym::F { ch, .. } => (cc.channels[*ch as usize].1, None),
        }
    }

    fn decode(&self, cc: &Compiled) -> CompositeSymbol {
        match self {
            KSym::M { ch, ms, mr } => CompositeSymbol::Matched {
                channel: cc.decode_channel(*ch),
                sent: cc.decode_msg(*ms),
                received: cc.decode_msg(*mr),
            },
            KSym::L { ch, m } => CompositeSymbol::LoneSend {
                channel: cc.decode_channel(*ch),
                message: cc.decode_msg(*m),
            },
            KSym::T { p, tag } => CompositeSymbol::Internal {
                process: cc.procs[*p as usize].clone(),
                tag: cc.tags[*tag as usize].clone(),
            },
            KSym::F { ch, m } => CompositeSymbol::FinalReceive {
                channel: cc.decode_channel(*ch),
                message: cc.decode_msg(*m),
            },
        }
    }
}

/// Distinct actions of the system, with owning process: the second
/// component of the counter-example automaton's state space.
fn system_actions(cc: &Compiled) -> Vec<(u16, CAct)> {
    let mut acts: Vec<(u16, CAct)> = cc.trans.iter().map(|t| (t.proc, t.act)).collect();
    acts.sort_unstable();
    acts.dedup();
    acts
}

fn action_procs(cc: &Compiled, a: &(u16, CAct)) -> u16 {
    match a.1 {
        CAct::Send { ch, .. } => cc.channels[ch as usize].0,
        CAct::Recv { ch, .. } => cc.channels[ch as usize].1,
        CAct::Tau { .. } => a.0,
    }
}

/// The composite alphabet of a system under a mode.
fn composite_alphabet(cc: &Compiled, mode: InterferenceMode) -> Vec<KSym> {
    let acts = system_actions(cc);
    let mut sends: BTreeMap<u16, BTreeSet<u16>> = BTreeMap::new();
    let mut recvs: BTreeMap<u16, BTreeSet<u16>> = BTreeMap::new();
    let mut out = Vec::new();
    for (p, a) in &acts {
        match a {
            CAct::Send { ch, msg } => {
                sends.entry(*ch).or_default().insert(*msg);
                out.push(KSym::L { ch: *ch, m: *msg });
            }
            CAct::Recv { ch, msg } => {
                recvs.entry(*ch).or_default().insert(*msg);
                out.push(KSym::F { ch: *ch, m: *msg });
            }
            CAct::Tau { tag } => out.push(KSym::T { p: *p, tag: *tag }),
        }
    }
    for (ch, ms) in &sends {
        if let Some(mrs) = recvs.get(ch) {
            for m in ms {
                for mr in mrs {
                    if mode.corrupt || m == mr {
                        out.push(KSym::M { ch: *ch, ms: *m, mr: *mr });
                    }
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

// ---------------------------------------------------------------------------
// Borderline-violation automaton
// ---------------------------------------------------------------------------

/// Functional form of the counter-example automaton. States:
/// `0` initial, `1` accepting, then `(channel, action, phase)` triples where
/// the action remembers one active process of the last guessed interaction
/// and the phase distinguishes "guessed send" from "chasing the cycle".
pub(crate) struct BvFun<'a> {
    cc: &'a Compiled,
    mode: InterferenceMode,
    acts: Vec<(u16, CAct)>,
    act_index: BTreeMap<(u16, CAct), usize>,
}

impl<'a> BvFun<'a> {
    pub fn new(cc: &'a Compiled, mode: InterferenceMode) -> Self {
        let acts = system_actions(cc);
        let act_index = acts.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        BvFun { cc, mode, acts, act_index }
    }

    pub fn n_states(&self) -> usize {
        2 + 2 * self.cc.channels.len() * self.acts.len()
    }

    fn mid(&self, ch: u16, act: usize, phase: bool) -> usize {
        2 + ((ch as usize * self.acts.len()) + act) * 2 + phase as usize
    }

    /// Representative stored actions for an interaction symbol. A matched
    /// pair involves both endpoint processes; storing either endpoint's
    /// action and branching nondeterministically preserves the language.
    fn reps(&self, sym: &KSym) -> Vec<usize> {
        match sym {
            KSym::M { ch, ms, mr } => {
                let s = (self.cc.channels[*ch as usize].0, CAct::Send { ch: *ch, msg: *ms });
                let r = (self.cc.channels[*ch as usize].1, CAct::Recv { ch: *ch, msg: *mr });
                vec![self.act_index[&s], self.act_index[&r]]
            }
            KSym::L { ch, m } => {
                let s = (self.cc.channels[*ch as usize].0, CAct::Send { ch: *ch, msg: *m });
                vec![self.act_index[&s]]
            }
            KSym::T { p, tag } => vec![self.act_index[&(*p, CAct::Tau { tag: *tag })]],
            KSym::F { .. } => vec![],
        }
    }

    fn overlap(&self, act: usize, sym: &KSym) -> bool {
        let ap = action_procs(self.cc, &self.acts[act]);
        let (p1, p2) = sym.procs(self.cc);
        ap == p1 || Some(ap) == p2
    }

    pub fn step(&self, state: usize, sym: &KSym) -> Vec<usize> {
        let mut out = Vec::new();
        match state {
            0 => {
                if sym.is_nr() {
                    out.push(0);
                    if let KSym::L { ch, m } = sym {
                        let s = (self.cc.channels[*ch as usize].0, CAct::Send { ch: *ch, msg: *m });
                        out.push(self.mid(*ch, self.act_index[&s], false));
                    }
                }
            }
            1 => {}
            _ => {
                let rel = state - 2;
                let phase = rel % 2 == 1;
                let act = (rel / 2) % self.acts.len();
                let ch = (rel / 2 / self.acts.len()) as u16;
                if sym.is_nr() {
                    // Stay when the symbol avoids the guessed channel; in the
                    // guessed phase this rule is dropped under out-of-order,
                    // where later traffic on the channel can still pair up.
                    let avoids = sym.channel() != Some(ch);
                    if avoids && (phase || !self.mode.ooo) {
                        out.push(state);
                    }
                    if self.overlap(act, sym) {
                        for rep in self.reps(sym) {
                            out.push(self.mid(ch, rep, true));
                        }
                    }
                } else if let KSym::F { ch: fch, .. } = sym {
                    // Close the cycle: the final receive pairs with the
                    // guessed send, so it must live on the guessed channel.
                    if phase && *fch == ch && self.overlap(act, sym) {
                        out.push(1);
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Builds the counter-example automaton as an explicit NFA over the
/// system's composite alphabet. The state count is exactly
/// `2 + 2 * |channels| * |actions|`.
pub fn build_a_bv(s: &System, mode: InterferenceMode) -> Nfa<CompositeSymbol> {
    let cc = Compiled::new(s);
    let f = BvFun::new(&cc, mode);
    let alphabet = composite_alphabet(&cc, mode);
    let mut nfa = Nfa::new(f.n_states(), 0);
    nfa.accept(1);
    for state in 0..f.n_states() {
        for sym in &alphabet {
            for t in f.step(state, sym) {
                nfa.add(state, sym.decode(&cc), t);
            }
        }
    }
    nfa
}

// ---------------------------------------------------------------------------
// Realizable-prefix automaton
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct RscState {
    pub locs: Vec<u16>,
    /// Channel of the guessed send matched by the final reception.
    pub chi: Option<u16>,
    /// Bitmask of non-empty channels.
    pub nonempty: u32,
    pub accept: bool,
}

pub(crate) struct RscFun<'a> {
    cc: &'a Compiled,
    mode: InterferenceMode,
}

impl<'a> RscFun<'a> {
    pub fn new(cc: &'a Compiled, mode: InterferenceMode) -> Result<Self, RscCapExceeded> {
        if cc.channels.len() > 32 {
            return Err(RscCapExceeded { states: 0, cap: 0 });
        }
        Ok(RscFun { cc, mode })
    }

    pub fn initial(&self) -> RscState {
        RscState { locs: self.cc.initials.clone(), chi: None, nonempty: 0, accept: false }
    }

    /// Sub-masks of `s`, i.e. every way lossiness can empty whole channels
    /// before the next symbol. Without lossiness only `s` itself.
    fn premasks(&self, s: u32) -> Vec<u32> {
        if !self.mode.lossy {
            return vec![s];
        }
        let mut out = Vec::new();
        let mut m = s;
        loop {
            out.push(m);
            if m == 0 {
                break;
            }
            m = (m - 1) & s;
        }
        out
    }

    pub fn successors(&self, st: &RscState) -> Vec<(KSym, RscState)> {
        let mut out = Vec::new();
        if st.accept {
            return out;
        }
        for mask in self.premasks(st.nonempty) {
            for (p, &loc) in st.locs.iter().enumerate() {
                for &tid in &self.cc.outs[p][loc as usize] {
                    let t = &self.cc.trans[tid as usize];
                    match t.act {
                        CAct::Tau { tag } => {
                            let mut nxt = st.clone();
                            nxt.nonempty = mask;
                            nxt.locs[p] = t.to;
                            out.push((KSym::T { p: p as u16, tag }, nxt));
                        }
                        CAct::Send { ch, msg } => {
                            // Lone send: the channel becomes non-empty.
                            let mut nxt = st.clone();
                            nxt.nonempty = mask | (1 << ch);
                            nxt.locs[p] = t.to;
                            out.push((KSym::L { ch, m: msg }, nxt.clone()));
                            // The same send may be the one the final
                            // reception answers.
                            let mut guessed = nxt;
                            guessed.chi = Some(ch);
                            out.push((KSym::L { ch, m: msg }, guessed));
                            // Matched pair: the receiver consumes at once.
                            if self.mode.ooo || mask & (1 << ch) == 0 {
                                let (_, rproc) = self.cc.channels[ch as usize];
                                let rloc = st.locs[rproc as usize];
                                for &rtid in &self.cc.outs[rproc as usize][rloc as usize] {
                                    let rt = &self.cc.trans[rtid as usize];
                                    if let CAct::Recv { ch: rch, msg: rmsg } = rt.act {
                                        if rch != ch {
                                            continue;
                                        }
                                        if !self.mode.corrupt && rmsg != msg {
                                            continue;
                                        }
                                        let mut m2 = st.clone();
                                        m2.nonempty = mask;
                                        m2.locs[p] = t.to;
                                        m2.locs[rproc as usize] = rt.to;
                                        out.push((KSym::M { ch, ms: msg, mr: rmsg }, m2));
                                    }
                                }
                            }
                        }
                        CAct::Recv { ch, msg } => {
                            // Receives only appear as the closing action,
                            // consuming the guessed send.
                            if st.chi == Some(ch) && mask & (1 << ch) != 0 {
                                let mut nxt = st.clone();
                                nxt.nonempty = mask;
                                nxt.locs[p] = t.to;
                                nxt.accept = true;
                                out.push((KSym::F { ch, m: msg }, nxt));
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable_by(|a, b| a.cmp(b));
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, Error)]
#[error("realizable-prefix automaton exceeded the state cap ({states} > {cap})")]
pub struct RscCapExceeded {
    pub states: usize,
    pub cap: usize,
}

/// Builds the realizable-prefix automaton as an explicit NFA: it accepts
/// exactly the executions of shape (interactions)* followed by one receive
/// whose prefix admits a synchronously-realizable communication. Fails when
/// the reachable state count exceeds `cap`.
pub fn build_a_rsc(
    s: &System,
    mode: InterferenceMode,
    cap: usize,
) -> Result<Nfa<CompositeSymbol>, RscCapExceeded> {
    let cc = Compiled::new(s);
    let f = RscFun::new(&cc, mode)?;
    let init = f.initial();
    let mut index: HashMap<RscState, usize> = HashMap::new();
    let mut states = vec![init.clone()];
    index.insert(init, 0);
    let mut edges: Vec<(usize, KSym, usize)> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let cur = states[i].clone();
        for (sym, nxt) in f.successors(&cur) {
            let id = match index.get(&nxt) {
                Some(&id) => id,
                None => {
                    let id = states.len();
                    if id >= cap {
                        return Err(RscCapExceeded { states: id + 1, cap });
                    }
                    states.push(nxt.clone());
                    index.insert(nxt, id);
                    id
                }
            };
            edges.push((i, sym, id));
        }
        i += 1;
    }
    let mut nfa = Nfa::new(states.len(), 0);
    for (st, id) in states.iter().zip(0..) {
        if st.accept {
            nfa.accept(id);
        }
    }
    for (a, sym, b) in edges {
        nfa.add(a, sym.decode(&cc), b);
    }
    Ok(nfa)
}

// ---------------------------------------------------------------------------
// The decision procedure
// ---------------------------------------------------------------------------

/// Options for the system-level check.
#[derive(Debug, Clone)]
pub struct IrscOptions {
    /// Existential variant: the system only needs one valid communication
    /// per execution to be realizable (bounded search).
    pub any_communication: bool,
    /// Depth for the bounded existential search.
    pub any_comm_depth: usize,
    /// Cap on explored product states.
    pub state_cap: usize,
    /// How many candidate witnesses to validate definitionally.
    pub witness_candidates: usize,
    pub deadline: Option<Instant>,
}

impl Default for IrscOptions {
    fn default() -> Self {
        IrscOptions {
            any_communication: false,
            any_comm_depth: 8,
            state_cap: 20_000_000,
            witness_candidates: 64,
            deadline: None,
        }
    }
}

/// A concrete counter-example to synchronous realizability.
#[derive(Debug, Clone, Serialize)]
pub struct IrscWitness {
    pub word: Vec<CompositeSymbol>,
    pub execution: Vec<Action>,
    /// A communication of the execution that is a borderline violation,
    /// when the definitional validation confirmed one.
    pub communication: Option<CommunicationSet>,
    /// Whether the witness was confirmed against the definitions.
    pub confirmed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IrscVerdict {
    pub holds: bool,
    pub mode: InterferenceMode,
    pub witness: Option<IrscWitness>,
}

#[derive(Debug, Error)]
pub enum IrscError {
    #[error(transparent)]
    Cap(#[from] RscCapExceeded),
    #[error(transparent)]
    Resource(#[from] ResourceError),
}

/// Definitional borderline-violation test for a decoded candidate: the
/// execution must be realizable under the mode, its prefix must admit a
/// realizable communication while every prefix communication stays
/// acyclic, and some full communication must be cyclic.
fn confirm_borderline(
    s: &System,
    e: &Execution,
    mode: InterferenceMode,
) -> Option<CommunicationSet> {
    if e.0.is_empty() || !e.0.last().map(Action::is_receive).unwrap_or(false) {
        return None;
    }
    let limits = Limits::default();
    match crate::interference::is_execution(s, e, mode, &limits) {
        Ok((true, _)) => {}
        _ => return None,
    }
    let prefix = Execution(e.0[..e.0.len() - 1].to_vec());
    let pre_comms = valid_communications(&prefix, mode).ok()?;
    if pre_comms.is_empty() || !pre_comms.iter().all(|c| is_irsc_equivalent(&prefix, c)) {
        return None;
    }
    let full = valid_communications(e, mode).ok()?;
    full.into_iter().find(|c| !is_irsc_equivalent(e, c))
}

/// Decides membership in the interference-aware synchronous realizability
/// class: empty intersection of the realizable-prefix automaton with the
/// counter-example automaton. On failure the shortest accepted words are
/// decoded and validated against the definitions to produce a confirmed
/// borderline violation.
pub fn check_irsc(s: &System, mode: InterferenceMode, opts: &IrscOptions) -> Result<IrscVerdict, IrscError> {
    if opts.any_communication {
        return check_irsc_existential(s, mode, opts);
    }
    let cc = Compiled::new(s);
    let rsc = RscFun::new(&cc, mode).map_err(|_| RscCapExceeded { states: 0, cap: 32 })?;
    let bv = BvFun::new(&cc, mode);
    // Breadth-first product walk; accepting pairs in length order.
    type Pair = (RscState, usize);
    let init: Pair = (rsc.initial(), 0);
    let mut index: HashMap<Pair, u32> = HashMap::new();
    let mut states: Vec<Pair> = vec![init.clone()];
    let mut parent: Vec<Option<(u32, KSym)>> = vec![None];
    index.insert(init, 0);
    let mut queue = VecDeque::new();
    queue.push_back(0u32);
    let mut accepted: Vec<u32> = Vec::new();
    while let Some(i) = queue.pop_front() {
        if let Some(d) = opts.deadline {
            if Instant::now() > d {
                return Err(IrscError::Resource(ResourceError::Timeout));
            }
        }
        let (rst, bst) = states[i as usize].clone();
        if rst.accept && bst == 1 {
            accepted.push(i);
            if accepted.len() >= opts.witness_candidates {
                break;
            }
            continue;
        }
        for (sym, rnxt) in rsc.successors(&rst) {
            for bnxt in bv.step(bst, &sym) {
                let key = (rnxt.clone(), bnxt);
                if !index.contains_key(&key) {
                    let id = states.len() as u32;
                    if states.len() >= opts.state_cap {
                        return Err(IrscError::Cap(RscCapExceeded {
                            states: states.len() + 1,
                            cap: opts.state_cap,
                        }));
                    }
                    states.push(key.clone());
                    parent.push(Some((i, sym)));
                    index.insert(key, id);
                    queue.push_back(id);
                }
            }
        }
    }
    if accepted.is_empty() {
        return Ok(IrscVerdict { holds: true, mode, witness: None });
    }
    // Decode and validate candidates, shortest first.
    let decode = |i: u32| -> Vec<KSym> {
        let mut word = Vec::new();
        let mut cur = i;
        while let Some((p, sym)) = parent[cur as usize] {
            word.push(sym);
            cur = p;
        }
        word.reverse();
        word
    };
    let mut fallback: Option<IrscWitness> = None;
    for &i in &accepted {
        let word = decode(i);
        let public: Vec<CompositeSymbol> = word.iter().map(|k| k.decode(&cc)).collect();
        let execution = decode_word(&public);
        if let Some(comm) = confirm_borderline(s, &execution, mode) {
            return Ok(IrscVerdict {
                holds: false,
                mode,
                witness: Some(IrscWitness {
                    word: public,
                    execution: execution.0,
                    communication: Some(comm),
                    confirmed: true,
                }),
            });
        }
        if fallback.is_none() {
            fallback = Some(IrscWitness {
                word: public,
                execution: execution.0,
                communication: None,
                confirmed: false,
            });
        }
    }
    Ok(IrscVerdict { holds: false, mode, witness: fallback })
}

/// Existential variant by bounded enumeration: a violation is an execution
/// none of whose communications is acyclic.
fn check_irsc_existential(
    s: &System,
    mode: InterferenceMode,
    opts: &IrscOptions,
) -> Result<IrscVerdict, IrscError> {
    let cc = Compiled::new(s);
    let limits = Limits::default();
    // Depth-limited DFS over executions.
    let mut stack = vec![(cc.initial_config(mode), Vec::<Action>::new())];
    let mut seen: BTreeSet<(usize, Vec<Action>)> = BTreeSet::new();
    while let Some((cfg, acts)) = stack.pop() {
        if !acts.is_empty() && acts.last().map(|a| a.is_receive()).unwrap_or(false) {
            let e = Execution(acts.clone());
            if let Ok(comms) = valid_communications(&e, mode) {
                if !comms.is_empty() && comms.iter().all(|c| !is_irsc_equivalent(&e, c)) {
                    return Ok(IrscVerdict {
                        holds: false,
                        mode,
                        witness: Some(IrscWitness {
                            word: Vec::new(),
                            execution: acts,
                            communication: None,
                            confirmed: true,
                        }),
                    });
                }
            }
        }
        if acts.len() >= opts.any_comm_depth {
            continue;
        }
        if !seen.insert((acts.len(), acts.clone())) {
            continue;
        }
        for (fired, mut nxt) in
            crate::interference::csuccessors(&cc, &cfg, mode, None, &limits)?
        {
            nxt.canonicalize(mode);
            let mut a2 = acts.clone();
            a2.push(cc.decode_action(&cc.trans[fired.trans as usize]));
            stack.push((nxt, a2));
        }
    }
    Ok(IrscVerdict { holds: true, mode, witness: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Channel, Message, ProcessId};

    fn chan(s: &str, r: &str) -> Channel {
        Channel::new(ProcessId::new(s), ProcessId::new(r))
    }

    /// The worked five-action execution:
    /// p>q!a . q>p!b . q>p?b . p>q!c . p>q?c
    fn example_e() -> Execution {
        Execution(vec![
            Action::Send(chan("p", "q"), Message::new("a")),
            Action::Send(chan("q", "p"), Message::new("b")),
            Action::Receive(chan("q", "p"), Message::new("b")),
            Action::Send(chan("p", "q"), Message::new("c")),
            Action::Receive(chan("p", "q"), Message::new("c")),
        ])
    }

    #[test]
    fn lossy_matching_pair_4_5() {
        let pairs = matching_pairs(&example_e(), InterferenceMode::LOSSY);
        assert!(pairs.contains(&Interaction::Pair { send: 4, recv: 5 }));
        assert!(!pairs.contains(&Interaction::Pair { send: 1, recv: 5 }));
    }

    #[test]
    fn corrupt_matching_pair_1_5() {
        let pairs = matching_pairs(&example_e(), InterferenceMode::CORRUPT);
        assert!(pairs.contains(&Interaction::Pair { send: 1, recv: 5 }));
        assert!(!pairs.contains(&Interaction::Pair { send: 4, recv: 5 }));
    }

    #[test]
    fn ooo_pairs_on_appended_execution() {
        let mut e = example_e();
        e.0.push(Action::Receive(chan("p", "q"), Message::new("a")));
        let pairs = matching_pairs(&e, InterferenceMode::OOO);
        assert!(pairs.contains(&Interaction::Pair { send: 1, recv: 6 }));
        assert!(pairs.contains(&Interaction::Pair { send: 4, recv: 5 }));
    }

    #[test]
    fn perfect_mode_forced_unique_match() {
        let e = Execution(vec![
            Action::Send(chan("p", "q"), Message::new("a")),
            Action::Receive(chan("p", "q"), Message::new("a")),
        ]);
        let pairs = matching_pairs(&e, InterferenceMode::NONE);
        assert_eq!(pairs, vec![Interaction::Pair { send: 1, recv: 2 }]);
        assert!(is_perfect_pair(&e, 1, 2));
        let comms = valid_communications(&e, InterferenceMode::NONE).unwrap();
        assert_eq!(comms.len(), 1);
    }

    #[test]
    fn two_valid_communications_under_lossy_corrupt() {
        let mode = InterferenceMode { lossy: true, corrupt: true, ooo: false };
        let comms = valid_communications(&example_e(), mode).unwrap();
        assert_eq!(comms.len(), 2);
        let c1 = CommunicationSet(vec![
            Interaction::Pair { send: 1, recv: 5 },
            Interaction::Pair { send: 2, recv: 3 },
            Interaction::Unmatched { send: 4 },
        ]);
        let c2 = CommunicationSet(vec![
            Interaction::Unmatched { send: 1 },
            Interaction::Pair { send: 2, recv: 3 },
            Interaction::Pair { send: 4, recv: 5 },
        ]);
        assert!(comms.contains(&c1));
        assert!(comms.contains(&c2));
    }

    #[test]
    fn empty_execution_has_the_empty_communication() {
        let comms = valid_communications(&Execution(vec![]), InterferenceMode::NONE).unwrap();
        assert_eq!(comms, vec![CommunicationSet(vec![])]);
    }

    #[test]
    fn uncoverable_receive_is_reported() {
        let e = Execution(vec![Action::Receive(chan("p", "q"), Message::new("a"))]);
        let err = valid_communications(&e, InterferenceMode::NONE).unwrap_err();
        assert_eq!(err.index, 1);
    }

    fn c1() -> CommunicationSet {
        CommunicationSet(vec![
            Interaction::Pair { send: 1, recv: 5 },
            Interaction::Pair { send: 2, recv: 3 },
            Interaction::Unmatched { send: 4 },
        ])
    }

    fn c2() -> CommunicationSet {
        CommunicationSet(vec![
            Interaction::Unmatched { send: 1 },
            Interaction::Pair { send: 2, recv: 3 },
            Interaction::Pair { send: 4, recv: 5 },
        ])
    }

    #[test]
    fn conflict_graph_of_c1_matches_the_reference() {
        let e = example_e();
        let g = conflict_graph(&e, &c1());
        let vi = |x: &Interaction| g.vertices.iter().position(|v| v == x).unwrap();
        let p15 = vi(&Interaction::Pair { send: 1, recv: 5 });
        let p23 = vi(&Interaction::Pair { send: 2, recv: 3 });
        let u4 = vi(&Interaction::Unmatched { send: 4 });
        // The three drawn edges: both directions between {1,5} and {2,3},
        // plus {2,3} -> {4}.
        assert!(g.edges.contains(&(p15, p23)));
        assert!(g.edges.contains(&(p23, p15)));
        assert!(g.edges.contains(&(p23, u4)));
        // The definition also yields the transitively implied {1,5} -> {4}
        // (indices 1 and 4 share process p).
        assert!(g.edges.contains(&(p15, u4)));
        assert_eq!(g.edges.len(), 4);
        assert!(!g.is_acyclic());
    }

    #[test]
    fn c2_is_realizable_and_c1_is_not() {
        let e = example_e();
        assert!(!is_irsc_equivalent(&e, &c1()));
        assert!(is_irsc_equivalent(&e, &c2()));
        assert!(is_irsc_execution(&e, &c2()));
        assert!(!is_irsc_execution(&e, &c1()));
    }

    #[test]
    fn singleton_send_graph_has_no_edges() {
        let e = Execution(vec![Action::Send(chan("p", "q"), Message::new("a"))]);
        let c = CommunicationSet(vec![Interaction::Unmatched { send: 1 }]);
        let g = conflict_graph(&e, &c);
        assert_eq!(g.vertices.len(), 1);
        assert!(g.edges.is_empty());
        assert!(is_irsc_equivalent(&e, &c));
    }

    #[test]
    fn a_bv_state_count_law() {
        for sys in [crate::corpus::fig1(), crate::corpus::fig3()] {
            let nfa = build_a_bv(&sys, InterferenceMode::NONE);
            let c = sys.channels().len();
            let a = sys.actions().len();
            assert_eq!(nfa.n_states, 2 + 2 * c * a);
        }
    }

    #[test]
    fn a_bv_accepts_nothing_for_empty_systems() {
        let mut s = System::new("empty");
        s.add_automaton(crate::model::FifoAutomaton::new(
            ProcessId::new("p"),
            crate::model::StateId::new("q0"),
        ));
        s.add_automaton(crate::model::FifoAutomaton::new(
            ProcessId::new("q"),
            crate::model::StateId::new("r0"),
        ));
        let nfa = build_a_bv(&s, InterferenceMode::NONE);
        assert!(nfa.is_empty());
    }

    #[test]
    fn a_rsc_rejects_empty_word_and_fig1_shape_word() {
        let s = crate::corpus::fig1();
        let nfa = build_a_rsc(&s, InterferenceMode::NONE, 100_000).unwrap();
        assert!(!nfa.accepts(&[]));
        // start matched, data matched, end lone, then ack answered: a
        // realizable prefix closed by a reception.
        let sr = chan("s", "r");
        let rs = chan("r", "s");
        let word = vec![
            CompositeSymbol::Matched {
                channel: sr.clone(),
                sent: Message::new("start"),
                received: Message::new("start"),
            },
            CompositeSymbol::Matched {
                channel: sr.clone(),
                sent: Message::new("data"),
                received: Message::new("data"),
            },
            CompositeSymbol::LoneSend { channel: sr.clone(), message: Message::new("end") },
            CompositeSymbol::FinalReceive { channel: sr, message: Message::new("end") },
        ];
        assert!(nfa.accepts(&word));
        // A final receive needs a pending guessed send on its channel.
        let bad = vec![CompositeSymbol::FinalReceive {
            channel: rs,
            message: Message::new("ack"),
        }];
        assert!(!nfa.accepts(&bad));
    }

    #[test]
    fn fig1_is_realizable_without_interference() {
        let v = check_irsc(&crate::corpus::fig1(), InterferenceMode::NONE, &IrscOptions::default())
            .unwrap();
        assert!(v.holds, "{:?}", v.witness);
    }

    #[test]
    fn unmatched_send_only_system_is_realizable() {
        let mut s = System::new("sendonly");
        let mut a = crate::model::FifoAutomaton::new(ProcessId::new("p"), crate::model::StateId::new("q0"));
        a.add(
            crate::model::StateId::new("q0"),
            Action::Send(chan("p", "q"), Message::new("m")),
            crate::model::StateId::new("q1"),
        );
        s.add_automaton(a);
        s.add_automaton(crate::model::FifoAutomaton::new(
            ProcessId::new("q"),
            crate::model::StateId::new("r0"),
        ));
        let v = check_irsc(&s, InterferenceMode::NONE, &IrscOptions::default()).unwrap();
        assert!(v.holds);
    }

    #[test]
    fn crossing_logs_defeat_realizability() {
        let v = check_irsc(
            &crate::corpus::client_server_logger(),
            InterferenceMode::NONE,
            &IrscOptions::default(),
        )
        .unwrap();
        assert!(!v.holds);
        let w = v.witness.expect("witness");
        assert!(w.confirmed, "witness should validate definitionally");
        assert!(w.communication.is_some());
    }
}
