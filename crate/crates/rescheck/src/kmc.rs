//! Bounded compatibility checking over the k-reachability set: eventual
//! reception, progress, exhaustivity, and their conjunctions.
//!
//! All three properties quantify over every configuration of `RS_k` and ask
//! for a k-bounded continuation witnessing something: a particular receive
//! (eventual reception), any receive by a waiting process (progress), or a
//! particular send transition (exhaustivity). Each check reduces to a
//! backward closure over the labelled k-bounded successor graph.

use crate::interference::{
    reach_k, BoundedReachSet, CAct, InterferenceMode, Limits, ResourceError,
};
use crate::model::{is_csa, Action, Configuration, CsaDiagnostics, System};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KmcError {
    #[error("system is not a collection of communicating session automata")]
    NotCsa(CsaDiagnostics),
    #[error(transparent)]
    Resource(#[from] ResourceError),
}

/// A failing configuration with a shortest trace reaching it.
#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub configuration: Configuration,
    pub trace: Vec<Action>,
    pub explanation: String,
}

/// Outcome of a single property check.
#[derive(Debug, Clone, Serialize)]
pub struct PropVerdict {
    pub holds: bool,
    pub counterexample: Option<Counterexample>,
}

impl PropVerdict {
    fn ok() -> Self {
        PropVerdict { holds: true, counterexample: None }
    }
}

/// Options affecting property semantics.
#[derive(Debug, Clone, Copy, Default)]
pub struct KmcOptions {
    /// Progress demands a receive after exactly one step instead of after
    /// any k-bounded continuation.
    pub pg_single_step: bool,
}

/// Aggregated verdict for one bound and mode.
#[derive(Debug, Clone, Serialize)]
pub struct KmcVerdict {
    pub k: usize,
    pub mode: InterferenceMode,
    pub k_exhaustive: bool,
    pub k_er: bool,
    pub k_pg: bool,
    pub counterexamples: BTreeMap<String, Counterexample>,
}

impl KmcVerdict {
    pub fn kmc(&self) -> bool {
        self.k_exhaustive && self.k_er && self.k_pg
    }

    pub fn kwmc(&self) -> bool {
        self.k_exhaustive && self.k_er
    }
}

/// Shared per-(k, mode) analysis state: the reachability graph plus its
/// reverse adjacency.
pub struct KmcAnalysis {
    rs: BoundedReachSet,
    radj: Vec<Vec<u32>>,
}

impl KmcAnalysis {
    pub fn new(s: &System, k: usize, mode: InterferenceMode, limits: &Limits) -> Result<Self, KmcError> {
        let (ok, diag) = is_csa(s);
        if !ok {
            return Err(KmcError::NotCsa(diag));
        }
        let rs = reach_k(s, k, mode, limits)?;
        let mut radj = vec![Vec::new(); rs.len()];
        for (a, _, b) in &rs.edges {
            radj[*b as usize].push(*a);
        }
        Ok(KmcAnalysis { rs, radj })
    }

    pub fn reach_set(&self) -> &BoundedReachSet {
        &self.rs
    }

    /// Configurations from which some `good` configuration is reachable.
    /// `good` marks configurations that already satisfy the goal.
    fn backward_closure(&self, mut good: Vec<bool>) -> Vec<bool> {
        let mut queue: Vec<u32> = good
            .iter()
            .enumerate()
            .filter(|(_, g)| **g)
            .map(|(i, _)| i as u32)
            .collect();
        while let Some(i) = queue.pop() {
            for &p in &self.radj[i as usize] {
                if !good[p as usize] {
                    good[p as usize] = true;
                    queue.push(p);
                }
            }
        }
        good
    }

    fn counterexample(&self, cfg: u32, explanation: String) -> Counterexample {
        Counterexample {
            configuration: self.rs.compiled.decode_config(&self.rs.configs[cfg as usize]),
            trace: self.rs.trace_to(cfg),
            explanation,
        }
    }

    /// Eventual reception: every channel head is receivable within the
    /// bound. Under corruption the reception is relaxed to any receive on
    /// the same channel, since the head can always corrupt into whatever
    /// the receiver expects.
    pub fn check_k_er(&self) -> PropVerdict {
        let rs = &self.rs;
        let relaxed = rs.mode.corrupt;
        let nchan = rs.compiled.channels.len();
        if relaxed {
            // One closure per channel.
            for ch in 0..nchan {
                let mut good = vec![false; rs.len()];
                for (a, f, _) in &rs.edges {
                    if let CAct::Recv { ch: c, .. } = rs.compiled.trans[f.trans as usize].act {
                        if c as usize == ch {
                            good[*a as usize] = true;
                        }
                    }
                }
                let reach = self.backward_closure(good);
                for (i, cfg) in rs.configs.iter().enumerate() {
                    if !cfg.chans[ch].is_empty() && !reach[i] {
                        let c = rs.compiled.decode_channel(ch as u16);
                        return PropVerdict {
                            holds: false,
                            counterexample: Some(self.counterexample(
                                i as u32,
                                format!("channel {c} holds a message but no k-bounded continuation receives on it"),
                            )),
                        };
                    }
                }
            }
            return PropVerdict::ok();
        }
        // Strict head discipline: collect the needed (channel, message)
        // obligations first, then one closure per obligation.
        let mut needed: BTreeMap<(u16, u16), Vec<u32>> = BTreeMap::new();
        for (i, cfg) in rs.configs.iter().enumerate() {
            for (ch, w) in cfg.chans.iter().enumerate() {
                if w.is_empty() {
                    continue;
                }
                if rs.mode.ooo {
                    let mut seen = Vec::new();
                    for m in w {
                        if !seen.contains(m) {
                            seen.push(*m);
                            needed.entry((ch as u16, *m)).or_default().push(i as u32);
                        }
                    }
                } else {
                    needed.entry((ch as u16, w[0])).or_default().push(i as u32);
                }
            }
        }
        for ((ch, m), members) in needed {
            let mut good = vec![false; rs.len()];
            for (a, f, _) in &rs.edges {
                if let CAct::Recv { ch: c, msg } = rs.compiled.trans[f.trans as usize].act {
                    if c == ch && msg == m {
                        good[*a as usize] = true;
                    }
                }
            }
            let reach = self.backward_closure(good);
            for i in members {
                if !reach[i as usize] {
                    let c = rs.compiled.decode_channel(ch);
                    let msg = rs.compiled.decode_msg(m);
                    return PropVerdict {
                        holds: false,
                        counterexample: Some(self.counterexample(
                            i,
                            format!("message {msg} on channel {c} is never received within bound {}", rs.k),
                        )),
                    };
                }
            }
        }
        PropVerdict::ok()
    }

    /// Progress: a process sitting in a receiving state eventually fires a
    /// receive within the bound.
    pub fn check_k_pg(&self, opts: KmcOptions) -> PropVerdict {
        let rs = &self.rs;
        let nproc = rs.compiled.procs.len();
        // Receiving (non-sink) states per process; internal actions are
        // neutral, states with no communication at all carry no obligation.
        let mut receiving: Vec<Vec<bool>> = Vec::with_capacity(nproc);
        for p in 0..nproc {
            let mut v = vec![false; rs.compiled.states[p].len()];
            for (q, item) in v.iter_mut().enumerate() {
                let outs = &rs.compiled.outs[p][q];
                let has_send = outs
                    .iter()
                    .any(|t| matches!(rs.compiled.trans[*t as usize].act, CAct::Send { .. }));
                let has_recv = outs
                    .iter()
                    .any(|t| matches!(rs.compiled.trans[*t as usize].act, CAct::Recv { .. }));
                *item = has_recv && !has_send;
            }
            receiving.push(v);
        }
        for p in 0..nproc {
            let mut good = vec![false; rs.len()];
            for (a, f, _) in &rs.edges {
                let t = &rs.compiled.trans[f.trans as usize];
                if t.proc as usize == p && matches!(t.act, CAct::Recv { .. }) {
                    good[*a as usize] = true;
                }
            }
            let sat = if opts.pg_single_step {
                // Exactly one step, then the receive.
                let mut one = vec![false; rs.len()];
                for (a, _, b) in &rs.edges {
                    if good[*b as usize] {
                        one[*a as usize] = true;
                    }
                }
                one
            } else {
                self.backward_closure(good)
            };
            for (i, cfg) in rs.configs.iter().enumerate() {
                if receiving[p][cfg.locs[p] as usize] && !sat[i] {
                    let pid = rs.compiled.procs[p].clone();
                    let st = rs.compiled.states[p][cfg.locs[p] as usize].clone();
                    return PropVerdict {
                        holds: false,
                        counterexample: Some(self.counterexample(
                            i as u32,
                            format!("process {pid} waits in receiving state {st} with no k-bounded continuation in which it receives"),
                        )),
                    };
                }
            }
        }
        PropVerdict::ok()
    }

    /// Exhaustivity: every send transition available at the current state of
    /// a process in a sending state is fireable within some k-bounded
    /// continuation.
    pub fn check_k_exhaustive(&self) -> PropVerdict {
        let rs = &self.rs;
        let nproc = rs.compiled.procs.len();
        for p in 0..nproc {
            for q in 0..rs.compiled.states[p].len() {
                let outs = &rs.compiled.outs[p][q];
                let has_send = outs
                    .iter()
                    .any(|t| matches!(rs.compiled.trans[*t as usize].act, CAct::Send { .. }));
                let has_recv = outs
                    .iter()
                    .any(|t| matches!(rs.compiled.trans[*t as usize].act, CAct::Recv { .. }));
                if !has_send || has_recv {
                    continue; // only sending states carry obligations
                }
                let members: Vec<u32> = rs
                    .configs
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.locs[p] as usize == q)
                    .map(|(i, _)| i as u32)
                    .collect();
                if members.is_empty() {
                    continue;
                }
                for &tid in outs {
                    if !matches!(rs.compiled.trans[tid as usize].act, CAct::Send { .. }) {
                        continue;
                    }
                    let mut good = vec![false; rs.len()];
                    for (a, f, _) in &rs.edges {
                        if f.trans == tid {
                            good[*a as usize] = true;
                        }
                    }
                    let reach = self.backward_closure(good);
                    for &i in &members {
                        if !reach[i as usize] {
                            let act = rs.compiled.decode_action(&rs.compiled.trans[tid as usize]);
                            return PropVerdict {
                                holds: false,
                                counterexample: Some(self.counterexample(
                                    i,
                                    format!("send {act} is enabled at the control state but never fireable within bound {}", rs.k),
                                )),
                            };
                        }
                    }
                }
            }
        }
        PropVerdict::ok()
    }

    fn verdict(&self, with_pg: bool, opts: KmcOptions) -> KmcVerdict {
        let exh = self.check_k_exhaustive();
        let er = self.check_k_er();
        let pg = if with_pg { self.check_k_pg(opts) } else { PropVerdict::ok() };
        let mut counterexamples = BTreeMap::new();
        if let Some(c) = &exh.counterexample {
            counterexamples.insert("k-exhaustivity".to_string(), c.clone());
        }
        if let Some(c) = &er.counterexample {
            counterexamples.insert("k-eventual-reception".to_string(), c.clone());
        }
        if let Some(c) = &pg.counterexample {
            counterexamples.insert("k-progress".to_string(), c.clone());
        }
        KmcVerdict {
            k: self.rs.k,
            mode: self.rs.mode,
            k_exhaustive: exh.holds,
            k_er: er.holds,
            k_pg: pg.holds,
            counterexamples,
        }
    }
}

pub fn check_k_er(s: &System, k: usize, mode: InterferenceMode, limits: &Limits) -> Result<PropVerdict, KmcError> {
    Ok(KmcAnalysis::new(s, k, mode, limits)?.check_k_er())
}

pub fn check_k_pg(s: &System, k: usize, mode: InterferenceMode, limits: &Limits) -> Result<PropVerdict, KmcError> {
    Ok(KmcAnalysis::new(s, k, mode, limits)?.check_k_pg(KmcOptions::default()))
}

pub fn check_k_exhaustive(s: &System, k: usize, mode: InterferenceMode, limits: &Limits) -> Result<PropVerdict, KmcError> {
    Ok(KmcAnalysis::new(s, k, mode, limits)?.check_k_exhaustive())
}

/// Full bound-k compatibility: exhaustivity, eventual reception, progress.
pub fn check_kmc(s: &System, k: usize, mode: InterferenceMode, limits: &Limits) -> Result<KmcVerdict, KmcError> {
    Ok(KmcAnalysis::new(s, k, mode, limits)?.verdict(true, KmcOptions::default()))
}

/// Weak variant: progress is not required.
pub fn check_kwmc(s: &System, k: usize, mode: InterferenceMode, limits: &Limits) -> Result<KmcVerdict, KmcError> {
    let a = KmcAnalysis::new(s, k, mode, limits)?;
    let mut v = a.verdict(false, KmcOptions::default());
    // Report progress too for diagnostics; the weak verdict ignores it.
    let pg = a.check_k_pg(KmcOptions::default());
    v.k_pg = pg.holds;
    if let Some(c) = pg.counterexample {
        v.counterexamples.insert("k-progress".to_string(), c);
    }
    Ok(v)
}

/// Outcome of the least-k search.
#[derive(Debug)]
pub enum FindK {
    Found { k: usize, verdict: KmcVerdict },
    /// No bound up to `k_max` satisfies the property. `saturated_at` is set
    /// when the reachability graph stopped growing before `k_max`, which
    /// pins the remaining bounds to the same verdict.
    None { k_max: usize, saturated_at: Option<usize> },
}

#[derive(Debug, Error)]
#[error("while checking bound k={k}: {source}")]
pub struct FindKError {
    pub k: usize,
    #[source]
    pub source: KmcError,
}

/// Iterates k = 1..=k_max and returns the first bound where the (weak or
/// full) property holds.
pub fn find_least_k(
    s: &System,
    k_max: usize,
    mode: InterferenceMode,
    weak: bool,
    limits: &Limits,
) -> Result<FindK, FindKError> {
    assert!(k_max >= 1);
    let mut prev_size: Option<(usize, usize)> = None;
    for k in 1..=k_max {
        let a = KmcAnalysis::new(s, k, mode, limits).map_err(|e| FindKError { k, source: e })?;
        let size = (a.rs.len(), a.rs.edges.len());
        let v = a.verdict(true, KmcOptions::default());
        let pass = if weak { v.kwmc() } else { v.kmc() };
        if pass {
            return Ok(FindK::Found { k, verdict: v });
        }
        if prev_size == Some(size) {
            return Ok(FindK::None { k_max, saturated_at: Some(k) });
        }
        prev_size = Some(size);
    }
    Ok(FindK::None { k_max, saturated_at: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    fn two_proc(build: impl Fn(&mut FifoAutomaton, &mut FifoAutomaton)) -> System {
        let pa = ProcessId::new("a");
        let pb = ProcessId::new("b");
        let mut a = FifoAutomaton::new(pa.clone(), StateId::new("a0"));
        let mut b = FifoAutomaton::new(pb.clone(), StateId::new("b0"));
        build(&mut a, &mut b);
        let mut s = System::new("two");
        s.add_automaton(a);
        s.add_automaton(b);
        s
    }

    fn chan(s: &str, r: &str) -> Channel {
        Channel::new(ProcessId::new(s), ProcessId::new(r))
    }

    #[test]
    fn orphan_message_fails_k_er() {
        let s = two_proc(|a, _b| {
            a.add(
                StateId::new("a0"),
                Action::Send(chan("a", "b"), Message::new("m")),
                StateId::new("a1"),
            );
        });
        let v = check_k_er(&s, 1, InterferenceMode::NONE, &Limits::default()).unwrap();
        assert!(!v.holds);
        let c = v.counterexample.unwrap();
        assert!(c.explanation.contains("never received"));
        assert_eq!(c.trace.len(), 1);
    }

    #[test]
    fn no_receiving_state_makes_progress_vacuous() {
        let s = two_proc(|a, _b| {
            a.add(
                StateId::new("a0"),
                Action::Send(chan("a", "b"), Message::new("m")),
                StateId::new("a1"),
            );
        });
        let v = check_k_pg(&s, 1, InterferenceMode::NONE, &Limits::default()).unwrap();
        assert!(v.holds);
    }

    #[test]
    fn saturating_sender_fails_exhaustivity() {
        let s = two_proc(|a, _b| {
            a.add(
                StateId::new("a0"),
                Action::Send(chan("a", "b"), Message::new("m")),
                StateId::new("a0"),
            );
        });
        for k in 1..=3 {
            let v = check_k_exhaustive(&s, k, InterferenceMode::NONE, &Limits::default()).unwrap();
            assert!(!v.holds, "k={k}");
        }
        match find_least_k(&s, 10, InterferenceMode::NONE, false, &Limits::default()).unwrap() {
            FindK::None { .. } => {}
            other => panic!("expected none, got {other:?}"),
        }
    }

    #[test]
    fn fig3_is_kmc_at_1() {
        let v = check_kmc(&crate::corpus::fig3(), 1, InterferenceMode::NONE, &Limits::default()).unwrap();
        assert!(v.kmc(), "{:?}", v.counterexamples);
    }

    #[test]
    fn weak_compatibility_ignores_progress() {
        // b waits forever for a second message a never sends: progress
        // fails, reception and exhaustivity hold.
        let s = two_proc(|a, b| {
            a.add(
                StateId::new("a0"),
                Action::Send(chan("a", "b"), Message::new("go")),
                StateId::new("a1"),
            );
            b.add(
                StateId::new("b0"),
                Action::Receive(chan("a", "b"), Message::new("go")),
                StateId::new("b1"),
            );
            b.add(
                StateId::new("b1"),
                Action::Receive(chan("a", "b"), Message::new("go2")),
                StateId::new("b2"),
            );
        });
        let v = check_kmc(&s, 1, InterferenceMode::NONE, &Limits::default()).unwrap();
        assert!(v.kwmc());
        assert!(!v.kmc());
        assert!(!v.k_pg);
    }

    #[test]
    fn non_csa_input_is_rejected() {
        let s = crate::corpus::fig1();
        assert!(matches!(
            check_kmc(&s, 1, InterferenceMode::NONE, &Limits::default()),
            Err(KmcError::NotCsa(_))
        ));
    }

    #[test]
    fn empty_transition_system_is_vacuously_compatible() {
        let s = two_proc(|_a, _b| {});
        let v = check_kmc(&s, 1, InterferenceMode::NONE, &Limits::default()).unwrap();
        assert!(v.kmc());
    }

    #[test]
    fn counterexample_traces_are_reachable() {
        let s = two_proc(|a, _b| {
            a.add(
                StateId::new("a0"),
                Action::Send(chan("a", "b"), Message::new("m")),
                StateId::new("a1"),
            );
        });
        let v = check_k_er(&s, 1, InterferenceMode::NONE, &Limits::default()).unwrap();
        let c = v.counterexample.unwrap();
        let e = crate::interference::Execution(c.trace.clone());
        let (ok, _) =
            crate::interference::is_execution(&s, &e, InterferenceMode::NONE, &Limits::default())
                .unwrap();
        assert!(ok);
    }
}
