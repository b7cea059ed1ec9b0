//! Verification of communicating FIFO systems under failure-prone channels.
//!
//! The crate decides membership in two failure-resilient classes of
//! communicating systems:
//!
//! - synchronous realizability with interference (`rsc`): every execution's
//!   communications can be reordered so each matched send is immediately
//!   followed by its receive, checked by intersecting two finite automata
//!   over composite interaction symbols;
//! - bounded compatibility (`kmc`): eventual reception, progress and
//!   exhaustivity over the k-bounded reachability set, plus the weak
//!   variant that drops progress.
//!
//! Channels may be perfect or subject to lossiness, corruption and
//! out-of-order delivery ([`interference::InterferenceMode`]); crash-stop
//! process failures are modelled structurally (`crash`) and session local
//! types with crash handling translate into FIFO automata (`session`).
//!
//! Most capabilities have a runnable demo under `examples/`; the thin
//! `rescheck` binary exposes them on the command line.

pub mod bench;
pub mod corpus;
pub mod crash;
pub mod interference;
pub mod kmc;
pub mod model;
pub mod nfa;
pub mod parse;
pub mod rsc;
pub mod session;

pub use interference::{Execution, InterferenceMode, Limits};
pub use model::{
    Action, Channel, Configuration, FifoAutomaton, Message, ProcessId, StateId, System,
};
