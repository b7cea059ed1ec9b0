//! A small nondeterministic finite automaton over an arbitrary symbol type,
//! with product construction, emptiness via breadth-first search, and
//! shortest accepted words.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// NFA with dense integer states. The alphabet is implicit in the
/// transitions.
#[derive(Debug, Clone)]
pub struct Nfa<S> {
    pub n_states: usize,
    pub initial: usize,
    pub accepting: Vec<bool>,
    /// trans[q] = outgoing (symbol, target) pairs.
    pub trans: Vec<Vec<(S, usize)>>,
}

impl<S: Ord + Clone> Nfa<S> {
    pub fn new(n_states: usize, initial: usize) -> Self {
        Nfa {
            n_states,
            initial,
            accepting: vec![false; n_states],
            trans: vec![Vec::new(); n_states],
        }
    }

    pub fn accept(&mut self, q: usize) {
        self.accepting[q] = true;
    }

    pub fn add(&mut self, from: usize, sym: S, to: usize) {
        if !self.trans[from].contains(&(sym.clone(), to)) {
            self.trans[from].push((sym, to));
        }
    }

    /// The distinct symbols appearing on transitions.
    pub fn alphabet(&self) -> BTreeSet<S> {
        self.trans.iter().flatten().map(|(s, _)| s.clone()).collect()
    }

    /// Word membership by subset simulation.
    pub fn accepts(&self, word: &[S]) -> bool {
        let mut cur: BTreeSet<usize> = BTreeSet::new();
        cur.insert(self.initial);
        for sym in word {
            let mut next = BTreeSet::new();
            for &q in &cur {
                for (s, t) in &self.trans[q] {
                    if s == sym {
                        next.insert(*t);
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            cur = next;
        }
        cur.iter().any(|&q| self.accepting[q])
    }

    /// A shortest accepted word, or `None` when the language is empty.
    pub fn shortest_accepted(&self) -> Option<Vec<S>> {
        let mut parent: BTreeMap<usize, Option<(usize, S)>> = BTreeMap::new();
        parent.insert(self.initial, None);
        let mut queue = VecDeque::new();
        queue.push_back(self.initial);
        while let Some(q) = queue.pop_front() {
            if self.accepting[q] {
                let mut word = Vec::new();
                let mut cur = q;
                while let Some(Some((p, s))) = parent.get(&cur) {
                    word.push(s.clone());
                    cur = *p;
                }
                word.reverse();
                return Some(word);
            }
            for (s, t) in &self.trans[q] {
                if !parent.contains_key(t) {
                    parent.insert(*t, Some((q, s.clone())));
                    queue.push_back(*t);
                }
            }
        }
        None
    }

    /// Synchronous product: accepts the intersection of both languages.
    pub fn product(&self, other: &Nfa<S>) -> Nfa<S> {
        let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut states = vec![(self.initial, other.initial)];
        index.insert((self.initial, other.initial), 0);
        let mut trans: Vec<Vec<(S, usize)>> = vec![Vec::new()];
        let mut i = 0;
        while i < states.len() {
            let (a, b) = states[i];
            for (s1, t1) in &self.trans[a] {
                for (s2, t2) in &other.trans[b] {
                    if s1 == s2 {
                        let key = (*t1, *t2);
                        let id = *index.entry(key).or_insert_with(|| {
                            states.push(key);
                            trans.push(Vec::new());
                            states.len() - 1
                        });
                        if !trans[i].contains(&(s1.clone(), id)) {
                            trans[i].push((s1.clone(), id));
                        }
                    }
                }
            }
            i += 1;
        }
        let accepting = states
            .iter()
            .map(|(a, b)| self.accepting[*a] && other.accepting[*b])
            .collect();
        Nfa { n_states: states.len(), initial: 0, accepting, trans }
    }

    pub fn is_empty(&self) -> bool {
        self.shortest_accepted().is_none()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word_nfa(word: &[u8]) -> Nfa<u8> {
        let mut n = Nfa::new(word.len() + 1, 0);
        for (i, c) in word.iter().enumerate() {
            n.add(i, *c, i + 1);
        }
        n.accept(word.len());
        n
    }

    #[test]
    fn membership_and_shortest() {
        let mut n = Nfa::new(3, 0);
        n.add(0, b'a', 0);
        n.add(0, b'b', 1);
        n.add(1, b'c', 2);
        n.accept(2);
        assert!(n.accepts(b"aabc"));
        assert!(!n.accepts(b"ab"));
        assert_eq!(n.shortest_accepted().unwrap(), b"bc".to_vec());
    }

    #[test]
    fn product_intersects() {
        let a = word_nfa(b"ab");
        let mut any = Nfa::new(1, 0);
        for c in [b'a', b'b'] {
            any.add(0, c, 0);
        }
        any.accept(0);
        let p = a.product(&any);
        assert!(p.accepts(b"ab"));
        assert!(!p.accepts(b"a"));
        let empty = word_nfa(b"ab").product(&word_nfa(b"ba"));
        assert!(empty.is_empty());
    }
}
