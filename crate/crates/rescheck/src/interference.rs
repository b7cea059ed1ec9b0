//! Channel interference models and reachability under them.
//!
//! Interference is a preorder on channel words: a word may evolve without
//! any process moving. The three failure axioms compose freely: lossiness
//! drops letters, corruption rewrites a letter to any other letter of the
//! alphabet, out-of-order swaps adjacent letters. Each successor step
//! applies the fired transition's perfect effect and then closes every
//! channel under the active axioms, so reachability explores exactly the
//! one-step relation of the semantics.
//!
//! Canonical channel forms keep the state space finite and small: under
//! out-of-order a channel is a multiset (stored sorted), and under
//! corruption message identity is quotiented away (any letter can become
//! any other), so only the channel length matters and contents are stored
//! as a wildcard.

use crate::model::{
    Action, Channel, Configuration, Message, ProcessId, StateId, System,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::time::Instant;
use thiserror::Error;

/// Which interference axioms are active. The empty set is perfect FIFO.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct InterferenceMode {
    pub lossy: bool,
    pub corrupt: bool,
    pub ooo: bool,
}

impl InterferenceMode {
    pub const NONE: InterferenceMode = InterferenceMode { lossy: false, corrupt: false, ooo: false };
    pub const LOSSY: InterferenceMode = InterferenceMode { lossy: true, corrupt: false, ooo: false };
    pub const CORRUPT: InterferenceMode = InterferenceMode { lossy: false, corrupt: true, ooo: false };
    pub const OOO: InterferenceMode = InterferenceMode { lossy: false, corrupt: false, ooo: true };

    pub fn is_none(&self) -> bool {
        !self.lossy && !self.corrupt && !self.ooo
    }

    /// Parses a comma- or plus-separated list of `none`, `lossy`,
    /// `corrupt`, `ooo` / `out-of-order`.
    pub fn parse(s: &str) -> Result<Self, ModeParseError> {
        let mut mode = InterferenceMode::NONE;
        for part in s.split(|c| c == ',' || c == '+').map(str::trim) {
            match part.to_ascii_lowercase().as_str() {
                "" | "none" | "perfect" => {}
                "lossy" | "loss" | "lossiness" => mode.lossy = true,
                "corrupt" | "corruption" => mode.corrupt = true,
                "ooo" | "out-of-order" | "outoforder" | "reorder" => mode.ooo = true,
                other => return Err(ModeParseError(other.to_string())),
            }
        }
        Ok(mode)
    }
}

impl fmt::Display for InterferenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_none() {
            return write!(f, "none");
        }
        let mut parts = Vec::new();
        if self.lossy {
            parts.push("lossy");
        }
        if self.corrupt {
            parts.push("corrupt");
        }
        if self.ooo {
            parts.push("ooo");
        }
        write!(f, "{}", parts.join("+"))
    }
}

#[derive(Debug, Clone, Error)]
#[error("unknown interference mode `{0}`")]
pub struct ModeParseError(pub String);

/// A finite sequence of actions. Matching-pair indices into an execution
/// are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Execution(pub Vec<Action>);

impl Execution {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The action at 1-based index `j`.
    pub fn at(&self, j: usize) -> &Action {
        &self.0[j - 1]
    }
}

/// Resource guard failures during exploration.
#[derive(Debug, Clone, Error)]
pub enum ResourceError {
    #[error("configuration store exceeded the cap of {cap} configurations")]
    ConfigCap { cap: usize },
    #[error("per-step successor set exceeded the cap of {cap}")]
    SuccessorCap { cap: usize },
    #[error("interference closure exceeded the cap of {cap} words")]
    ClosureCap { cap: usize },
    #[error("wall-clock deadline exceeded")]
    Timeout,
}

/// Exploration limits. `Default` is generous enough for desk-scale models.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_configs: usize,
    pub max_successors: usize,
    pub deadline: Option<Instant>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_configs: 4_000_000, max_successors: 1_000_000, deadline: None }
    }
}

/// Computes `{w' | w can evolve to w'}` by exhaustively closing `w` under
/// the mode's atomic events (one drop, one rewrite, one adjacent swap),
/// guarded by `cap`.
pub fn interference_closure(
    w: &[Message],
    alphabet: &BTreeSet<Message>,
    mode: InterferenceMode,
    cap: Option<usize>,
) -> Result<BTreeSet<Vec<Message>>, ResourceError> {
    let cap = cap.unwrap_or(100_000);
    let mut seen: BTreeSet<Vec<Message>> = BTreeSet::new();
    let mut queue: VecDeque<Vec<Message>> = VecDeque::new();
    seen.insert(w.to_vec());
    queue.push_back(w.to_vec());
    while let Some(cur) = queue.pop_front() {
        let mut push = |next: Vec<Message>, seen: &mut BTreeSet<Vec<Message>>, queue: &mut VecDeque<Vec<Message>>| {
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        };
        if mode.lossy {
            for i in 0..cur.len() {
                let mut next = cur.clone();
                next.remove(i);
                push(next, &mut seen, &mut queue);
            }
        }
        if mode.corrupt {
            for i in 0..cur.len() {
                for m in alphabet {
                    if m != &cur[i] {
                        let mut next = cur.clone();
                        next[i] = m.clone();
                        push(next, &mut seen, &mut queue);
                    }
                }
            }
        }
        if mode.ooo {
            for i in 0..cur.len().saturating_sub(1) {
                let mut next = cur.clone();
                next.swap(i, i + 1);
                push(next, &mut seen, &mut queue);
            }
        }
        if seen.len() > cap {
            return Err(ResourceError::ClosureCap { cap });
        }
    }
    Ok(seen)
}

// ---------------------------------------------------------------------------
// Compiled (index-based) representation used by every explorer.
// ---------------------------------------------------------------------------

/// Wildcard message index: channel contents under corruption.
pub(crate) const WILD: u16 = u16::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum CAct {
    Send { ch: u16, msg: u16 },
    Recv { ch: u16, msg: u16 },
    Tau { tag: u16 },
}

#[derive(Debug, Clone)]
pub(crate) struct FlatTrans {
    pub proc: u16,
    pub from: u16,
    pub act: CAct,
    pub to: u16,
}

/// Index-based system view: processes, states, channels and messages are
/// dense integers.
#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    pub procs: Vec<ProcessId>,
    pub msgs: Vec<Message>,
    pub channels: Vec<(u16, u16)>,
    pub states: Vec<Vec<StateId>>,
    pub initials: Vec<u16>,
    pub tags: Vec<String>,
    pub trans: Vec<FlatTrans>,
    /// outs[p][q] = indices into `trans`.
    pub outs: Vec<Vec<Vec<u32>>>,
}

impl Compiled {
    pub fn new(s: &System) -> Self {
        let procs: Vec<ProcessId> = s.automata.keys().cloned().collect();
        let pidx: BTreeMap<&ProcessId, u16> =
            procs.iter().enumerate().map(|(i, p)| (p, i as u16)).collect();
        let msgs: Vec<Message> = s.alphabet().into_iter().collect();
        let midx: BTreeMap<&Message, u16> =
            msgs.iter().enumerate().map(|(i, m)| (m, i as u16)).collect();
        let mut channels = Vec::new();
        for i in 0..procs.len() as u16 {
            for j in 0..procs.len() as u16 {
                if i != j {
                    channels.push((i, j));
                }
            }
        }
        let chidx: BTreeMap<(u16, u16), u16> =
            channels.iter().enumerate().map(|(i, c)| (*c, i as u16)).collect();
        let mut states = Vec::new();
        let mut initials = Vec::new();
        let mut tags: Vec<String> = Vec::new();
        let mut trans = Vec::new();
        let mut outs = Vec::new();
        for (p, a) in s.automata.values().enumerate() {
            let sts: Vec<StateId> = a.states.iter().cloned().collect();
            let sidx: BTreeMap<&StateId, u16> =
                sts.iter().enumerate().map(|(i, q)| (q, i as u16)).collect();
            let mut proc_outs = vec![Vec::new(); sts.len()];
            for t in &a.transitions {
                let act = match &t.action {
                    Action::Send(c, m) => CAct::Send {
                        ch: chidx[&(pidx[&c.sender], pidx[&c.receiver])],
                        msg: midx[&m],
                    },
                    Action::Receive(c, m) => CAct::Recv {
                        ch: chidx[&(pidx[&c.sender], pidx[&c.receiver])],
                        msg: midx[&m],
                    },
                    Action::Internal(_, tag) => {
                        let ti = match tags.iter().position(|t| t == tag) {
                            Some(i) => i,
                            None => {
                                tags.push(tag.clone());
                                tags.len() - 1
                            }
                        };
                        CAct::Tau { tag: ti as u16 }
                    }
                };
                let id = trans.len() as u32;
                trans.push(FlatTrans { proc: p as u16, from: sidx[&t.from], act, to: sidx[&t.to] });
                proc_outs[sidx[&t.from] as usize].push(id);
            }
            states.push(sts);
            initials.push(sidx[&a.initial]);
            outs.push(proc_outs);
        }
        Compiled { procs, msgs, channels, states, initials, tags, trans, outs }
    }

    pub fn initial_config(&self, mode: InterferenceMode) -> CConfig {
        let _ = mode;
        CConfig {
            locs: self.initials.clone(),
            chans: vec![Vec::new(); self.channels.len()],
        }
    }

    pub fn decode_action(&self, t: &FlatTrans) -> Action {
        match t.act {
            CAct::Send { ch, msg } => Action::Send(self.decode_channel(ch), self.decode_msg(msg)),
            CAct::Recv { ch, msg } => Action::Receive(self.decode_channel(ch), self.decode_msg(msg)),
            CAct::Tau { tag } => {
                Action::Internal(self.procs[t.proc as usize].clone(), self.tags[tag as usize].clone())
            }
        }
    }

    pub fn decode_channel(&self, ch: u16) -> Channel {
        let (s, r) = self.channels[ch as usize];
        Channel::new(self.procs[s as usize].clone(), self.procs[r as usize].clone())
    }

    pub fn decode_msg(&self, m: u16) -> Message {
        if m == WILD {
            Message::new("*")
        } else {
            self.msgs[m as usize].clone()
        }
    }

    pub fn decode_config(&self, c: &CConfig) -> Configuration {
        Configuration {
            states: self
                .procs
                .iter()
                .zip(&c.locs)
                .map(|(p, q)| (p.clone(), self.states[self.proc_index(p)][*q as usize].clone()))
                .collect(),
            channels: self
                .channels
                .iter()
                .zip(&c.chans)
                .map(|(ch, w)| {
                    let (s, r) = *ch;
                    (
                        Channel::new(self.procs[s as usize].clone(), self.procs[r as usize].clone()),
                        w.iter().map(|m| self.decode_msg(*m)).collect(),
                    )
                })
                .collect(),
        }
    }

    pub fn proc_index(&self, p: &ProcessId) -> usize {
        self.procs.iter().position(|x| x == p).expect("process present")
    }

    pub fn encode_config(&self, c: &Configuration, mode: InterferenceMode) -> Option<CConfig> {
        let mut locs = Vec::with_capacity(self.procs.len());
        for (i, p) in self.procs.iter().enumerate() {
            let q = c.states.get(p)?;
            locs.push(self.states[i].iter().position(|x| x == q)? as u16);
        }
        let mut chans = vec![Vec::new(); self.channels.len()];
        for (ch, w) in &c.channels {
            let s = self.procs.iter().position(|p| p == &ch.sender)? as u16;
            let r = self.procs.iter().position(|p| p == &ch.receiver)? as u16;
            let ci = self.channels.iter().position(|c| *c == (s, r))?;
            let mut word = Vec::with_capacity(w.len());
            for m in w {
                word.push(if m.label == "*" {
                    WILD
                } else {
                    self.msgs.iter().position(|x| x == m)? as u16
                });
            }
            chans[ci] = word;
        }
        let mut cc = CConfig { locs, chans };
        cc.canonicalize(mode);
        Some(cc)
    }
}

/// Compiled configuration: one state index per process, one word per
/// channel, always stored in canonical form for the active mode.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct CConfig {
    pub locs: Vec<u16>,
    pub chans: Vec<Vec<u16>>,
}

impl CConfig {
    pub fn canonicalize(&mut self, mode: InterferenceMode) {
        for w in &mut self.chans {
            canon_word(w, mode);
        }
    }
}

pub(crate) fn canon_word(w: &mut Vec<u16>, mode: InterferenceMode) {
    if mode.corrupt {
        for m in w.iter_mut() {
            *m = WILD;
        }
    } else if mode.ooo {
        w.sort_unstable();
    }
}

/// All canonical words a channel can evolve to with no process action.
fn chan_evolutions(w: &[u16], mode: InterferenceMode) -> Vec<Vec<u16>> {
    if mode.lossy {
        if mode.corrupt {
            // Only the length matters.
            (0..=w.len()).map(|l| vec![WILD; l]).collect()
        } else if mode.ooo {
            sub_multisets(w)
        } else {
            subsequences(w)
        }
    } else {
        vec![w.to_vec()]
    }
}

/// Canonical words reachable after appending `m` to `w`.
fn send_evolutions(w: &[u16], m: u16, mode: InterferenceMode, k: Option<usize>) -> Vec<Vec<u16>> {
    let mut base = w.to_vec();
    base.push(if mode.corrupt { WILD } else { m });
    canon_word(&mut base, mode);
    let mut out = chan_evolutions(&base, mode);
    if let Some(k) = k {
        out.retain(|x| x.len() <= k);
    }
    out
}

/// Residues `w'` such that the channel can evolve from `w` to `m . w'`.
fn recv_residues(w: &[u16], m: u16, mode: InterferenceMode) -> Vec<Vec<u16>> {
    if mode.corrupt {
        // Any head can corrupt into m; residue keeps (or loses) the rest.
        if w.is_empty() {
            return Vec::new();
        }
        if mode.lossy {
            (0..w.len()).map(|l| vec![WILD; l]).collect()
        } else {
            vec![vec![WILD; w.len() - 1]]
        }
    } else if mode.ooo {
        // Multiset semantics: any occurrence of m is receivable.
        if !w.contains(&m) {
            return Vec::new();
        }
        let mut rest = w.to_vec();
        let pos = rest.iter().position(|x| *x == m).expect("contains m");
        rest.remove(pos);
        if mode.lossy {
            sub_multisets(&rest)
        } else {
            vec![rest]
        }
    } else if mode.lossy {
        // Drop a prefix, match m, keep any subsequence of the suffix.
        let mut out = BTreeSet::new();
        for (i, x) in w.iter().enumerate() {
            if *x == m {
                for s in subsequences(&w[i + 1..]) {
                    out.insert(s);
                }
            }
        }
        out.into_iter().collect()
    } else {
        match w.first() {
            Some(h) if *h == m => vec![w[1..].to_vec()],
            _ => Vec::new(),
        }
    }
}

fn subsequences(w: &[u16]) -> Vec<Vec<u16>> {
    let mut out = BTreeSet::new();
    let n = w.len();
    if n > 20 {
        // Guarded by callers; keep the enumeration bounded regardless.
        return vec![w.to_vec()];
    }
    for mask in 0..(1u32 << n) {
        let mut s = Vec::new();
        for (i, x) in w.iter().enumerate() {
            if mask & (1 << i) != 0 {
                s.push(*x);
            }
        }
        out.insert(s);
    }
    out.into_iter().collect()
}

fn sub_multisets(w: &[u16]) -> Vec<Vec<u16>> {
    // w is sorted; pick a count per distinct element.
    let mut groups: Vec<(u16, usize)> = Vec::new();
    for x in w {
        match groups.last_mut() {
            Some((v, n)) if v == x => *n += 1,
            _ => groups.push((*x, 1)),
        }
    }
    let mut out = vec![Vec::new()];
    for (v, n) in groups {
        let mut next = Vec::new();
        for base in &out {
            for take in 0..=n {
                let mut s = base.clone();
                s.extend(std::iter::repeat(v).take(take));
                next.push(s);
            }
        }
        out = next;
    }
    out
}

/// One fired transition: which process moved and which of its transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Fired {
    pub trans: u32,
}

pub(crate) fn csuccessors(
    cc: &Compiled,
    cfg: &CConfig,
    mode: InterferenceMode,
    k: Option<usize>,
    limits: &Limits,
) -> Result<Vec<(Fired, CConfig)>, ResourceError> {
    let mut out = Vec::new();
    for (p, &loc) in cfg.locs.iter().enumerate() {
        for &tid in &cc.outs[p][loc as usize] {
            let t = &cc.trans[tid as usize];
            match t.act {
                CAct::Tau { .. } => {
                    let mut nxt = cfg.clone();
                    nxt.locs[p] = t.to;
                    out.push((Fired { trans: tid }, nxt));
                }
                CAct::Send { ch, msg } => {
                    let acted = send_evolutions(&cfg.chans[ch as usize], msg, mode, k);
                    expand(cc, cfg, p, t.to, ch, acted, mode, tid, &mut out, limits)?;
                }
                CAct::Recv { ch, msg } => {
                    let acted = recv_residues(&cfg.chans[ch as usize], msg, mode);
                    expand(cc, cfg, p, t.to, ch, acted, mode, tid, &mut out, limits)?;
                }
            }
        }
    }
    Ok(out)
}

/// Cross product of the acted channel's candidates with every other
/// channel's no-action evolutions.
#[allow(clippy::too_many_arguments)]
fn expand(
    cc: &Compiled,
    cfg: &CConfig,
    proc: usize,
    to: u16,
    acted: u16,
    acted_words: Vec<Vec<u16>>,
    mode: InterferenceMode,
    tid: u32,
    out: &mut Vec<(Fired, CConfig)>,
    limits: &Limits,
) -> Result<(), ResourceError> {
    if acted_words.is_empty() {
        return Ok(());
    }
    // Candidate lists per channel; identity for non-lossy modes.
    let mut parts: Vec<Vec<Vec<u16>>> = Vec::with_capacity(cc.channels.len());
    let mut total: usize = acted_words.len();
    for (ci, w) in cfg.chans.iter().enumerate() {
        if ci == acted as usize {
            parts.push(Vec::new()); // placeholder
            continue;
        }
        let evs = chan_evolutions(w, mode);
        total = total.saturating_mul(evs.len());
        if total > limits.max_successors {
            return Err(ResourceError::SuccessorCap { cap: limits.max_successors });
        }
        parts.push(evs);
    }
    let mut stack: Vec<(usize, CConfig)> = vec![(0, {
        let mut base = cfg.clone();
        base.locs[proc] = to;
        base
    })];
    while let Some((ci, cur)) = stack.pop() {
        if ci == cc.channels.len() {
            out.push((Fired { trans: tid }, cur));
            if out.len() > limits.max_successors {
                return Err(ResourceError::SuccessorCap { cap: limits.max_successors });
            }
            continue;
        }
        if ci == acted as usize {
            for w in &acted_words {
                let mut nxt = cur.clone();
                nxt.chans[ci] = w.clone();
                stack.push((ci + 1, nxt));
            }
        } else {
            for w in &parts[ci] {
                let mut nxt = cur.clone();
                nxt.chans[ci] = w.clone();
                stack.push((ci + 1, nxt));
            }
        }
    }
    Ok(())
}

// signature uses u16 for the acted channel
#[allow(clippy::too_many_arguments)]
fn _expand_sig_note() {}

/// The k-bounded reachability set, with its labelled successor relation and
/// a breadth-first parent tree for shortest witnesses.
pub struct BoundedReachSet {
    pub k: usize,
    pub mode: InterferenceMode,
    pub(crate) compiled: Compiled,
    pub(crate) configs: Vec<CConfig>,
    pub(crate) index: HashMap<CConfig, u32>,
    pub(crate) edges: Vec<(u32, Fired, u32)>,
    pub(crate) parent: Vec<Option<(u32, Fired)>>,
}

impl BoundedReachSet {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn configurations(&self) -> impl Iterator<Item = Configuration> + '_ {
        self.configs.iter().map(|c| self.compiled.decode_config(c))
    }

    pub fn contains(&self, c: &Configuration) -> bool {
        self.compiled
            .encode_config(c, self.mode)
            .map(|cc| self.index.contains_key(&cc))
            .unwrap_or(false)
    }

    /// Shortest action trace from the initial configuration to config `i`.
    pub(crate) fn trace_to(&self, i: u32) -> Vec<Action> {
        let mut acts = Vec::new();
        let mut cur = i;
        while let Some((prev, fired)) = self.parent[cur as usize] {
            acts.push(self.compiled.decode_action(&self.compiled.trans[fired.trans as usize]));
            cur = prev;
        }
        acts.reverse();
        acts
    }
}

/// Fixed point of k-bounded successors from the initial configuration.
pub fn reach_k(
    s: &System,
    k: usize,
    mode: InterferenceMode,
    limits: &Limits,
) -> Result<BoundedReachSet, ResourceError> {
    assert!(k >= 1, "bound must be at least 1");
    let cc = Compiled::new(s);
    let init = cc.initial_config(mode);
    let mut configs = vec![init.clone()];
    let mut index = HashMap::new();
    index.insert(init, 0u32);
    let mut edges = Vec::new();
    let mut parent = vec![None];
    let mut queue = VecDeque::new();
    queue.push_back(0u32);
    while let Some(ci) = queue.pop_front() {
        if let Some(d) = limits.deadline {
            if Instant::now() > d {
                return Err(ResourceError::Timeout);
            }
        }
        let cur = configs[ci as usize].clone();
        for (fired, mut nxt) in csuccessors(&cc, &cur, mode, Some(k), limits)? {
            nxt.canonicalize(mode);
            let id = match index.get(&nxt) {
                Some(&id) => id,
                None => {
                    let id = configs.len() as u32;
                    if configs.len() >= limits.max_configs {
                        return Err(ResourceError::ConfigCap { cap: limits.max_configs });
                    }
                    configs.push(nxt.clone());
                    index.insert(nxt, id);
                    parent.push(Some((ci, fired)));
                    queue.push_back(id);
                    id
                }
            };
            edges.push((ci, fired, id));
        }
    }
    edges.sort_unstable_by_key(|(a, f, b)| (*a, f.trans, *b));
    edges.dedup_by_key(|(a, f, b)| (*a, f.trans, *b));
    Ok(BoundedReachSet { k, mode, compiled: cc, configs, index, edges, parent })
}

/// Successor configurations of `gamma` under the mode, decoded. `k` drops
/// successors exceeding the bound on any channel.
pub fn successors(
    s: &System,
    gamma: &Configuration,
    mode: InterferenceMode,
    k: Option<usize>,
) -> Result<Vec<(Action, Configuration)>, ResourceError> {
    let cc = Compiled::new(s);
    let enc = cc
        .encode_config(gamma, mode)
        .expect("configuration well-formed for the system");
    let limits = Limits::default();
    let mut out = Vec::new();
    for (fired, mut nxt) in csuccessors(&cc, &enc, mode, k, &limits)? {
        nxt.canonicalize(mode);
        out.push((
            cc.decode_action(&cc.trans[fired.trans as usize]),
            cc.decode_config(&nxt),
        ));
    }
    out.sort_by(|a, b| a.cmp(b));
    out.dedup();
    Ok(out)
}

/// Whether `e` is realizable step by step under the mode, with one
/// realizing configuration sequence as witness.
pub fn is_execution(
    s: &System,
    e: &Execution,
    mode: InterferenceMode,
    limits: &Limits,
) -> Result<(bool, Option<Vec<Configuration>>), ResourceError> {
    let cc = Compiled::new(s);
    let init = cc.initial_config(mode);
    // Depth-first over (step, configuration); channel lengths are bounded
    // by the number of sends, so the search space is finite.
    let mut visited: BTreeSet<(usize, CConfig)> = BTreeSet::new();
    let mut stack: Vec<(usize, CConfig, Vec<CConfig>)> = vec![(0, init.clone(), vec![init])];
    while let Some((step, cfg, path)) = stack.pop() {
        if step == e.0.len() {
            let witness = path.iter().map(|c| cc.decode_config(c)).collect();
            return Ok((true, Some(witness)));
        }
        if !visited.insert((step, cfg.clone())) {
            continue;
        }
        if visited.len() > limits.max_configs {
            return Err(ResourceError::ConfigCap { cap: limits.max_configs });
        }
        let want = &e.0[step];
        for (fired, mut nxt) in csuccessors(&cc, &cfg, mode, None, limits)? {
            let act = cc.decode_action(&cc.trans[fired.trans as usize]);
            if &act == want {
                nxt.canonicalize(mode);
                let mut p2 = path.clone();
                p2.push(nxt.clone());
                stack.push((step + 1, nxt, p2));
            }
        }
    }
    Ok((false, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn msgs(labels: &[&str]) -> Vec<Message> {
        labels.iter().map(|l| Message::new(*l)).collect()
    }

    #[test]
    fn closure_none_is_identity() {
        let w = msgs(&["a", "b"]);
        let alpha: BTreeSet<Message> = w.iter().cloned().collect();
        let c = interference_closure(&w, &alpha, InterferenceMode::NONE, None).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c.contains(&w));
    }

    #[test]
    fn closure_lossy_is_subsequences() {
        let w = msgs(&["a", "b"]);
        let alpha: BTreeSet<Message> = w.iter().cloned().collect();
        let c = interference_closure(&w, &alpha, InterferenceMode::LOSSY, None).unwrap();
        let expect: BTreeSet<Vec<Message>> =
            [msgs(&["a", "b"]), msgs(&["a"]), msgs(&["b"]), msgs(&[])].into_iter().collect();
        assert_eq!(c, expect);
    }

    #[test]
    fn closure_corrupt_reaches_data_to_end() {
        let w = msgs(&["data", "end"]);
        let alpha: BTreeSet<Message> =
            ["data", "end", "start"].iter().map(|l| Message::new(*l)).collect();
        let c = interference_closure(&w, &alpha, InterferenceMode::CORRUPT, None).unwrap();
        assert!(c.contains(&msgs(&["end", "end"])));
        // Non-expansion: every word has the same length under pure corruption.
        assert!(c.iter().all(|x| x.len() == 2));
        assert_eq!(c.len(), 9);
    }

    #[test]
    fn closure_cap_guards_explosion() {
        let w: Vec<Message> = (0..12).map(|i| Message::new(format!("m{i}"))).collect();
        let alpha: BTreeSet<Message> = w.iter().cloned().collect();
        let err = interference_closure(&w, &alpha, InterferenceMode::CORRUPT, Some(1000));
        assert!(matches!(err, Err(ResourceError::ClosureCap { .. })));
    }

    #[test]
    fn perfect_send_appends_receive_pops() {
        let s = corpus::fig1();
        let init = s.initial_configuration();
        let succ = successors(&s, &init, InterferenceMode::NONE, None).unwrap();
        // Only the start send is enabled initially.
        assert_eq!(succ.len(), 1);
        let (act, cfg) = &succ[0];
        assert_eq!(
            act,
            &Action::Send(
                Channel::new(ProcessId::new("s"), ProcessId::new("r")),
                Message::new("start")
            )
        );
        let sr = Channel::new(ProcessId::new("s"), ProcessId::new("r"));
        assert_eq!(cfg.channels[&sr], vec![Message::new("start")]);
        let succ2 = successors(&s, cfg, InterferenceMode::NONE, None).unwrap();
        let recv = succ2
            .iter()
            .find(|(a, _)| a.is_receive())
            .expect("receive of start enabled");
        assert!(recv.1.channels[&sr].is_empty());
    }

    fn e_c() -> Execution {
        // start sent and received, data corrupted to end, ack, more data.
        let sr = |m: &str| Action::Send(Channel::new(ProcessId::new("s"), ProcessId::new("r")), Message::new(m));
        let rr = |m: &str| Action::Receive(Channel::new(ProcessId::new("s"), ProcessId::new("r")), Message::new(m));
        let rs_send = |m: &str| Action::Send(Channel::new(ProcessId::new("r"), ProcessId::new("s")), Message::new(m));
        Execution(vec![sr("start"), rr("start"), sr("data"), rr("end"), rs_send("ack"), sr("data")])
    }

    #[test]
    fn corrupt_execution_is_feasible_under_corruption_only() {
        let s = corpus::fig1();
        let lim = Limits::default();
        let (ok, wit) = is_execution(&s, &e_c(), InterferenceMode::CORRUPT, &lim).unwrap();
        assert!(ok);
        assert_eq!(wit.unwrap().len(), 7);
        let (ok_perfect, _) = is_execution(&s, &e_c(), InterferenceMode::NONE, &lim).unwrap();
        assert!(!ok_perfect);
    }

    #[test]
    fn empty_execution_is_always_feasible() {
        let s = corpus::fig1();
        let lim = Limits::default();
        for mode in [InterferenceMode::NONE, InterferenceMode::LOSSY] {
            let (ok, _) = is_execution(&s, &Execution(vec![]), mode, &lim).unwrap();
            assert!(ok);
        }
    }

    #[test]
    fn fig1_half_duplex_at_k1_perfect() {
        let s = corpus::fig1();
        let rs = reach_k(&s, 1, InterferenceMode::NONE, &Limits::default()).unwrap();
        for c in rs.configurations() {
            let nonempty = c.channels.values().filter(|w| !w.is_empty()).count();
            assert!(nonempty <= 1, "both channels non-empty in {c:?}");
        }
    }

    #[test]
    fn fig1_corruption_breaks_half_duplex() {
        let s = corpus::fig1();
        let rs = reach_k(&s, 1, InterferenceMode::CORRUPT, &Limits::default()).unwrap();
        let both = rs
            .configurations()
            .any(|c| c.channels.values().filter(|w| !w.is_empty()).count() == 2);
        assert!(both);
    }

    #[test]
    fn reach_is_monotone_in_k() {
        let s = corpus::fig1();
        let r1 = reach_k(&s, 1, InterferenceMode::NONE, &Limits::default()).unwrap();
        let r2 = reach_k(&s, 2, InterferenceMode::NONE, &Limits::default()).unwrap();
        for c in r1.configurations() {
            assert!(r2.contains(&c));
        }
        assert!(r2.len() >= r1.len());
    }

    #[test]
    fn mode_parsing_round_trips() {
        for s in ["none", "lossy", "corrupt", "ooo", "lossy+ooo", "lossy+corrupt+ooo"] {
            let m = InterferenceMode::parse(s).unwrap();
            assert_eq!(m, InterferenceMode::parse(&m.to_string()).unwrap());
        }
        assert!(InterferenceMode::parse("bogus").is_err());
    }
}
