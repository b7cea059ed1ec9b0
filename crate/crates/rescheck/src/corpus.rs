//! Built-in protocol models used by the benchmark harness and the test
//! suite. Each builder mirrors one of the `.sys` files shipped under
//! `corpus/`; `corpus/README.md` documents how the models were derived and
//! where they deviate from their sources.

use crate::model::*;

fn chan(s: &str, r: &str) -> Channel {
    Channel::new(ProcessId::new(s), ProcessId::new(r))
}

fn send(s: &str, r: &str, m: &str) -> Action {
    Action::Send(chan(s, r), Message::new(m))
}

fn recv(s: &str, r: &str, m: &str) -> Action {
    Action::Receive(chan(s, r), Message::new(m))
}

fn st(q: &str) -> StateId {
    StateId::new(q)
}

/// Half-duplex sender/receiver exchange: `start`, a stream of `data`, then
/// `end`/`ack`, with an error loop for premature data.
pub fn fig1() -> System {
    let mut s = System::new("fig1");
    let mut snd = FifoAutomaton::new(ProcessId::new("s"), st("s0"));
    snd.add(st("s0"), send("s", "r", "start"), st("s1"));
    snd.add(st("s1"), send("s", "r", "data"), st("s1"));
    snd.add(st("s1"), send("s", "r", "end"), st("s2"));
    snd.add(st("s2"), recv("r", "s", "ack"), st("s0"));
    snd.add(st("s0"), recv("r", "s", "err"), st("s3"));
    snd.add(st("s3"), send("s", "r", "data"), st("s0"));
    let mut rcv = FifoAutomaton::new(ProcessId::new("r"), st("r0"));
    rcv.add(st("r0"), recv("s", "r", "start"), st("r1"));
    rcv.add(st("r1"), recv("s", "r", "data"), st("r1"));
    rcv.add(st("r1"), recv("s", "r", "end"), st("r2"));
    rcv.add(st("r2"), send("r", "s", "ack"), st("r0"));
    rcv.add(st("r0"), recv("s", "r", "data"), st("r3"));
    rcv.add(st("r3"), send("r", "s", "err"), st("r0"));
    s.add_automaton(snd);
    s.add_automaton(rcv);
    s
}

/// Four-party ring with a non-regular reachability set: `s` pumps equal
/// numbers of `a`, `b`, `c` while `p`, `q`, `r` synchronize consumption with
/// an `al` token.
pub fn fig3() -> System {
    let mut sys = System::new("fig3");
    let mut s = FifoAutomaton::new(ProcessId::new("s"), st("s0"));
    s.add(st("s0"), send("s", "p", "a"), st("s1"));
    s.add(st("s1"), send("s", "q", "b"), st("s2"));
    s.add(st("s2"), send("s", "r", "c"), st("s0"));
    let mut p = FifoAutomaton::new(ProcessId::new("p"), st("p0"));
    p.add(st("p0"), recv("s", "p", "a"), st("p1"));
    p.add(st("p1"), send("p", "q", "al"), st("p2"));
    p.add(st("p2"), recv("r", "p", "al"), st("p0"));
    let mut q = FifoAutomaton::new(ProcessId::new("q"), st("q0"));
    q.add(st("q0"), recv("p", "q", "al"), st("q1"));
    q.add(st("q1"), recv("s", "q", "b"), st("q2"));
    q.add(st("q2"), send("q", "r", "al"), st("q0"));
    let mut r = FifoAutomaton::new(ProcessId::new("r"), st("r0"));
    r.add(st("r0"), recv("q", "r", "al"), st("r1"));
    r.add(st("r1"), recv("s", "r", "c"), st("r2"));
    r.add(st("r2"), send("r", "p", "al"), st("r0"));
    sys.add_automaton(s);
    sys.add_automaton(p);
    sys.add_automaton(q);
    sys.add_automaton(r);
    sys
}

/// Crash-handling client/server request-response pair. The server is
/// reliable; the client may crash in any live state and broadcasts the
/// crash symbol before stopping. Crash-absorption self-loops are written out
/// explicitly so the structural validator sees them.
pub fn fig4a() -> System {
    let mut sys = System::new("fig4a");
    let mut c = FifoAutomaton::new(ProcessId::new("c"), st("c0"));
    c.add(st("c0"), send("c", "s", "req"), st("c1"));
    c.add(st("c1"), recv("s", "c", "res"), st("c2"));
    c.add(st("c0"), Action::Internal(ProcessId::new("c"), "crash".into()), st("c3"));
    c.add(st("c1"), Action::Internal(ProcessId::new("c"), "crash".into()), st("c3"));
    c.add(st("c3"), Action::Send(chan("c", "s"), Message::crash()), st("c4"));
    c.add(st("c2"), Action::Receive(chan("s", "c"), Message::crash()), st("c2"));
    c.add(st("c4"), Action::Receive(chan("s", "c"), Message::crash()), st("c4"));
    let mut s = FifoAutomaton::new(ProcessId::new("s"), st("s0"));
    s.add(st("s0"), recv("c", "s", "req"), st("s1"));
    s.add(st("s1"), send("s", "c", "res"), st("s2"));
    s.add(st("s0"), Action::Receive(chan("c", "s"), Message::crash()), st("s3"));
    s.add(st("s3"), Action::Receive(chan("c", "s"), Message::crash()), st("s3"));
    sys.add_automaton(c);
    sys.add_automaton(s);
    sys
}

/// Alternating bit protocol, two parties. Stale data and stale
/// acknowledgements are consumed and discarded silently, which keeps every
/// receiving state completely specified for its channel.
pub fn alternating_bit() -> System {
    let mut sys = System::new("alternating_bit");
    let mut a = FifoAutomaton::new(ProcessId::new("a"), st("a0"));
    a.add(st("a0"), send("a", "b", "d0"), st("a1"));
    a.add(st("a1"), recv("b", "a", "ack0"), st("a2"));
    a.add(st("a1"), recv("b", "a", "ack1"), st("a0"));
    a.add(st("a2"), send("a", "b", "d1"), st("a3"));
    a.add(st("a3"), recv("b", "a", "ack1"), st("a0"));
    a.add(st("a3"), recv("b", "a", "ack0"), st("a2"));
    let mut b = FifoAutomaton::new(ProcessId::new("b"), st("b0"));
    b.add(st("b0"), recv("a", "b", "d0"), st("b1"));
    b.add(st("b0"), recv("a", "b", "d1"), st("b0"));
    b.add(st("b1"), send("b", "a", "ack0"), st("b2"));
    b.add(st("b2"), recv("a", "b", "d1"), st("b3"));
    b.add(st("b2"), recv("a", "b", "d0"), st("b2"));
    b.add(st("b3"), send("b", "a", "ack1"), st("b0"));
    sys.add_automaton(a);
    sys.add_automaton(b);
    sys
}

/// Two-phase commit: a coordinator collects one vote from each participant
/// and broadcasts the outcome. Votes are collected from `p1` first, so a
/// lost `p1` vote leaves the other vote orphaned.
pub fn commit() -> System {
    let mut sys = System::new("commit");
    let mut c = FifoAutomaton::new(ProcessId::new("c"), st("c0"));
    c.add(st("c0"), send("c", "p1", "prepare"), st("c1"));
    c.add(st("c1"), send("c", "p2", "prepare"), st("c2"));
    // Collect p1's vote, then p2's; commit only on yes+yes.
    c.add(st("c2"), recv("p1", "c", "yes"), st("c3y"));
    c.add(st("c2"), recv("p1", "c", "no"), st("c3n"));
    c.add(st("c3y"), recv("p2", "c", "yes"), st("c4yy"));
    c.add(st("c3y"), recv("p2", "c", "no"), st("c4n"));
    c.add(st("c3n"), recv("p2", "c", "yes"), st("c4n"));
    c.add(st("c3n"), recv("p2", "c", "no"), st("c4n"));
    c.add(st("c4yy"), send("c", "p1", "commit"), st("c5y"));
    c.add(st("c5y"), send("c", "p2", "commit"), st("c6"));
    c.add(st("c4n"), send("c", "p1", "abort"), st("c5n"));
    c.add(st("c5n"), send("c", "p2", "abort"), st("c6"));
    sys.add_automaton(c);
    for p in ["p1", "p2"] {
        let mut a = FifoAutomaton::new(ProcessId::new(p), st("q0"));
        a.add(st("q0"), recv("c", p, "prepare"), st("q1"));
        a.add(st("q1"), send(p, "c", "yes"), st("q2"));
        a.add(st("q1"), send(p, "c", "no"), st("q2"));
        a.add(st("q2"), recv("c", p, "commit"), st("q3"));
        a.add(st("q2"), recv("c", p, "abort"), st("q3"));
        sys.add_automaton(a);
    }
    sys
}

/// Client/server/logger. Both the client and the server append to the log,
/// and the two log channels race at the logger, which defeats synchronous
/// realizability while staying compatible at bound 1.
pub fn client_server_logger() -> System {
    let mut sys = System::new("client_server_logger");
    let mut c = FifoAutomaton::new(ProcessId::new("c"), st("c0"));
    c.add(st("c0"), send("c", "s", "req"), st("c1"));
    c.add(st("c1"), recv("s", "c", "res"), st("c2"));
    c.add(st("c2"), send("c", "l", "clog"), st("c0"));
    let mut s = FifoAutomaton::new(ProcessId::new("s"), st("s0"));
    s.add(st("s0"), recv("c", "s", "req"), st("s1"));
    s.add(st("s1"), send("s", "l", "slog"), st("s2"));
    s.add(st("s2"), send("s", "c", "res"), st("s0"));
    let mut l = FifoAutomaton::new(ProcessId::new("l"), st("l0"));
    l.add(st("l0"), recv("s", "l", "slog"), st("l0"));
    l.add(st("l0"), recv("c", "l", "clog"), st("l0"));
    sys.add_automaton(c);
    sys.add_automaton(s);
    sys.add_automaton(l);
    sys
}

/// Bounded single-decree consensus, 2 proposers and 3 acceptors, 2 rounds
/// per proposer; broadcasts and quorum receptions are unrolled into plain
/// sends and receives.
///
/// Proposal numbers are globally ordered: proposer `p1` uses 1 and 3,
/// proposer `p2` uses 2 and 4. Each round a proposer broadcasts `prep`,
/// collects all three responses (promise or reject), broadcasts `accreq` on
/// a two-promise quorum, collects all three responses again, and broadcasts
/// a terminal `chosen` on a two-accept quorum. A proposer whose final round
/// fails broadcasts the terminal `giveup`. Acceptors track the highest
/// number seen and which proposers have terminated, and stop once both have.
pub fn paxos_2p3a() -> System {
    let proposers = ["p1", "p2"];
    let acceptors = ["a1", "a2", "a3"];
    // numbers[i] = the two proposal numbers of proposer i, in round order.
    let numbers = [[1u32, 3], [2, 4]];
    let mut sys = System::new("paxos_2p3a");

    for (pi, p) in proposers.iter().enumerate() {
        let mut a = FifoAutomaton::new(ProcessId::new(p), st("r0_entry"));
        for (round, n) in numbers[pi].iter().enumerate() {
            let tag = format!("r{round}");
            // A failed non-final round retries; a failed final round gives
            // up. Both via an internal step so collect states stay pure.
            let fail = |a: &mut FifoAutomaton, cur: &str| {
                let (tagname, to) = if round == 0 {
                    ("retry", "r1_entry".to_string())
                } else {
                    ("quit", "gu0".to_string())
                };
                a.add(st(cur), Action::Internal(ProcessId::new(p), tagname.into()), st(&to));
            };
            // prep broadcast: three sends in acceptor order.
            let mut from = format!("{tag}_entry");
            for (ai, acc) in acceptors.iter().enumerate() {
                let to = if ai + 1 < acceptors.len() {
                    format!("{tag}_prep{}", ai + 1)
                } else {
                    format!("{tag}_c1_0_0")
                };
                a.add(st(&from), send(p, acc, &format!("prep{n}")), st(&to));
                from = to;
            }
            // Collect phase 1: one response per acceptor, in channel order;
            // state tracks (responses heard, promises among them).
            for heard in 0..acceptors.len() {
                for proms in 0..=heard {
                    let cur = format!("{tag}_c1_{heard}_{proms}");
                    let acc = acceptors[heard];
                    let nxt_prom = format!("{tag}_c1_{}_{}", heard + 1, proms + 1);
                    let nxt_rej = format!("{tag}_c1_{}_{}", heard + 1, proms);
                    a.add(st(&cur), recv(acc, p, &format!("prom{n}")), st(&nxt_prom));
                    a.add(st(&cur), recv(acc, p, &format!("rej{n}")), st(&nxt_rej));
                }
            }
            // Phase 1 quorum: two promises start the accept phase.
            for proms in 0..=acceptors.len() {
                let cur = format!("{tag}_c1_{}_{proms}", acceptors.len());
                if proms >= 2 {
                    let mut from = cur;
                    for (ai, acc) in acceptors.iter().enumerate() {
                        let to = if ai + 1 < acceptors.len() {
                            format!("{tag}_acc{}", ai + 1)
                        } else {
                            format!("{tag}_c2_0_0")
                        };
                        a.add(st(&from), send(p, acc, &format!("accreq{n}")), st(&to));
                        from = to;
                    }
                } else {
                    fail(&mut a, &cur);
                }
            }
            // Collect phase 2: accept/reject responses.
            for heard in 0..acceptors.len() {
                for accs in 0..=heard {
                    let cur = format!("{tag}_c2_{heard}_{accs}");
                    let acc = acceptors[heard];
                    let nxt_acc = format!("{tag}_c2_{}_{}", heard + 1, accs + 1);
                    let nxt_rej = format!("{tag}_c2_{}_{}", heard + 1, accs);
                    a.add(st(&cur), recv(acc, p, &format!("acc{n}")), st(&nxt_acc));
                    a.add(st(&cur), recv(acc, p, &format!("rej{n}")), st(&nxt_rej));
                }
            }
            // Phase 2 quorum: two accepts mean consensus.
            for accs in 0..=acceptors.len() {
                let cur = format!("{tag}_c2_{}_{accs}", acceptors.len());
                if accs >= 2 {
                    let mut from = cur;
                    for (ai, acc) in acceptors.iter().enumerate() {
                        let to = if ai + 1 < acceptors.len() {
                            format!("{tag}_ch{}", ai + 1)
                        } else {
                            "done".to_string()
                        };
                        a.add(st(&from), send(p, acc, &format!("chosen{n}")), st(&to));
                        from = to;
                    }
                } else {
                    fail(&mut a, &cur);
                }
            }
        }
        // giveup broadcast after the final round fails.
        a.add(st("gu0"), send(p, acceptors[0], "giveup"), st("gu1"));
        a.add(st("gu1"), send(p, acceptors[1], "giveup"), st("gu2"));
        a.add(st("gu2"), send(p, acceptors[2], "giveup"), st("fail"));
        sys.add_automaton(a);
    }

    // Acceptor: state (h, done-set) where h is the highest number promised
    // or accepted (0 = none) and done-set records terminated proposers.
    for acc in acceptors {
        let mut a = FifoAutomaton::new(ProcessId::new(acc), st("h0_d00"));
        let owner_of = |n: u32| if n % 2 == 1 { "p1" } else { "p2" };
        for h in 0u32..=4 {
            for d1 in [false, true] {
                for d2 in [false, true] {
                    let cur = format!("h{h}_d{}{}", d1 as u8, d2 as u8);
                    if d1 && d2 {
                        continue; // both proposers done: sink
                    }
                    for n in 1u32..=4 {
                        let p = owner_of(n);
                        let pdone = if p == "p1" { d1 } else { d2 };
                        if pdone {
                            continue;
                        }
                        // prep: promise when the number is new, reject otherwise.
                        let pend = format!("{cur}_prep{n}");
                        a.add(st(&cur), recv(p, acc, &format!("prep{n}")), st(&pend));
                        if n > h {
                            let nxt = format!("h{n}_d{}{}", d1 as u8, d2 as u8);
                            a.add(st(&pend), send(acc, p, &format!("prom{n}")), st(&nxt));
                        } else {
                            a.add(st(&pend), send(acc, p, &format!("rej{n}")), st(&cur));
                        }
                        // accreq: accept when still current, reject otherwise.
                        let aend = format!("{cur}_accreq{n}");
                        a.add(st(&cur), recv(p, acc, &format!("accreq{n}")), st(&aend));
                        if n >= h {
                            let nxt = format!("h{n}_d{}{}", d1 as u8, d2 as u8);
                            a.add(st(&aend), send(acc, p, &format!("acc{n}")), st(&nxt));
                        } else {
                            a.add(st(&aend), send(acc, p, &format!("rej{n}")), st(&cur));
                        }
                        // chosen: terminal for that proposer.
                        let nd1 = d1 || p == "p1";
                        let nd2 = d2 || p == "p2";
                        let nxt = format!("h{h}_d{}{}", nd1 as u8, nd2 as u8);
                        a.add(st(&cur), recv(p, acc, &format!("chosen{n}")), st(&nxt));
                    }
                    // giveup: terminal, not numbered.
                    for p in proposers {
                        let pdone = if p == "p1" { d1 } else { d2 };
                        if pdone {
                            continue;
                        }
                        let nd1 = d1 || p == "p1";
                        let nd2 = d2 || p == "p2";
                        let nxt = format!("h{h}_d{}{}", nd1 as u8, nd2 as u8);
                        a.add(st(&cur), recv(p, acc, "giveup"), st(&nxt));
                    }
                }
            }
        }
        sys.add_automaton(a);
    }
    sys
}

/// All built-in corpus systems, in benchmark order.
pub fn all() -> Vec<System> {
    vec![
        fig1(),
        fig3(),
        fig4a(),
        alternating_bit(),
        commit(),
        client_server_logger(),
        paxos_2p3a(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_corpus_systems_validate() {
        for s in all() {
            let res = s.validate_with(true);
            assert!(res.is_ok(), "{}: {:?}", s.name, res);
        }
    }

    #[test]
    fn paxos_is_csa() {
        let (ok, diag) = crate::model::is_csa(&paxos_2p3a());
        assert!(ok, "{diag:?}");
    }

    #[test]
    fn alternating_bit_is_directed_csa() {
        let s = alternating_bit();
        let (ok, _) = crate::model::is_csa(&s);
        assert!(ok);
        for a in s.automata.values() {
            for q in &a.states {
                let c = crate::model::classify_state(a, q).unwrap();
                match c.kind {
                    StateKind::Sending | StateKind::Receiving => assert!(c.directed),
                    _ => {}
                }
            }
        }
    }
}
