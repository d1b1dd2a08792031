//! Omega-automata: nondeterministic Buchi automata as the tableau output,
//! deterministic Rabin automata as the product-ready form, alphabet
//! restriction, and the HOA interchange format.
//!
//! Alphabets are explicit lists of proposition sets. Formulas translated in
//! isolation use the full powerset of their propositions; the synthesis
//! pipeline restricts to the observation sets the environment can actually
//! emit, which keeps determinization tractable.

mod hoa;
mod safra;
mod tableau;

pub use hoa::{export_hoa, import_hoa};
pub use safra::nba_to_dra;
pub use tableau::ltl_to_nba;

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::ltl::{Formula, LassoWord};
use crate::props::{PropSet, PropTable};

/// Default cap on determinization output size.
pub const DEFAULT_DRA_STATE_CAP: usize = 1_000_000;

/// Default cap on explicit alphabet size (full powerset of 12 propositions).
pub const DEFAULT_ALPHABET_CAP: usize = 4096;

/// Explicit alphabet: an ordered list of proposition sets with reverse lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<PropSet>,
    index: HashMap<PropSet, usize>,
}

impl Alphabet {
    pub fn from_symbols(symbols: Vec<PropSet>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, &s) in symbols.iter().enumerate() {
            if index.insert(s, i).is_some() {
                return Err(Error::Input("duplicate alphabet symbol".into()));
            }
        }
        if symbols.is_empty() {
            return Err(Error::Input("alphabet must be nonempty".into()));
        }
        Ok(Alphabet { symbols, index })
    }

    /// The full powerset alphabet over `n_props` propositions, ordered by
    /// ascending bitmask.
    pub fn full(n_props: usize, cap: usize) -> Result<Self> {
        if n_props >= usize::BITS as usize || (1usize << n_props) > cap {
            return Err(Error::Capacity(format!(
                "full alphabet over {n_props} propositions exceeds the cap of {cap} symbols"
            )));
        }
        let symbols = (0..(1u32 << n_props)).map(PropSet::from_bits).collect();
        Self::from_symbols(symbols)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[PropSet] {
        &self.symbols
    }

    pub fn symbol(&self, i: usize) -> PropSet {
        self.symbols[i]
    }

    pub fn index_of(&self, s: PropSet) -> Option<usize> {
        self.index.get(&s).copied()
    }
}

/// Nondeterministic Buchi automaton over an explicit alphabet.
#[derive(Debug, Clone)]
pub struct BuchiAutomaton {
    /// Proposition names fixing the bit order of alphabet symbols.
    pub ap: Vec<String>,
    pub alphabet: Alphabet,
    /// `transitions[state][symbol]` is the sorted successor set.
    pub transitions: Vec<Vec<Vec<u32>>>,
    pub initial: Vec<u32>,
    pub accepting: Vec<bool>,
}

impl BuchiAutomaton {
    pub fn state_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn successors(&self, state: u32, symbol: usize) -> &[u32] {
        &self.transitions[state as usize][symbol]
    }

    /// Restricts the alphabet to `symbols`, dropping transitions on all other
    /// inputs. The language over words built from `symbols` is unchanged.
    pub fn restrict_alphabet(&self, symbols: &[PropSet]) -> Result<BuchiAutomaton> {
        let alphabet = Alphabet::from_symbols(symbols.to_vec())?;
        let mut transitions = Vec::with_capacity(self.state_count());
        for rows in &self.transitions {
            let mut new_rows = Vec::with_capacity(alphabet.len());
            for &s in alphabet.symbols() {
                let idx = self.alphabet.index_of(s).ok_or_else(|| {
                    Error::Input("restriction symbol not in automaton alphabet".into())
                })?;
                new_rows.push(rows[idx].clone());
            }
            transitions.push(new_rows);
        }
        Ok(BuchiAutomaton {
            ap: self.ap.clone(),
            alphabet,
            transitions,
            initial: self.initial.clone(),
            accepting: self.accepting.clone(),
        })
    }

    /// Decides membership of an ultimately periodic word by searching for a
    /// reachable accepting cycle in the product of the automaton with the
    /// lasso's position graph. Test oracle for the determinization stage.
    pub fn accepts_lasso(&self, word: &LassoWord) -> Result<bool> {
        let positions = word.prefix.len() + word.cycle.len();
        let pos_succ = |i: usize| {
            if i + 1 < positions {
                i + 1
            } else {
                word.prefix.len()
            }
        };
        let symbol_at = |i: usize| -> Result<usize> {
            self.alphabet
                .index_of(word.at(i))
                .ok_or_else(|| Error::Input("lasso symbol outside the automaton alphabet".into()))
        };
        let n = self.state_count();
        let node = |q: usize, i: usize| q * positions + i;
        // Forward reachability from the initial front.
        let mut reachable = vec![false; n * positions];
        let mut queue = VecDeque::new();
        for &q in &self.initial {
            let v = node(q as usize, 0);
            if !reachable[v] {
                reachable[v] = true;
                queue.push_back((q as usize, 0usize));
            }
        }
        let mut edges: Vec<Vec<usize>> = vec![Vec::new(); n * positions];
        while let Some((q, i)) = queue.pop_front() {
            let sym = symbol_at(i)?;
            for &q2 in self.successors(q as u32, sym) {
                let w = node(q2 as usize, pos_succ(i));
                edges[node(q, i)].push(w);
                if !reachable[w] {
                    reachable[w] = true;
                    queue.push_back((q2 as usize, pos_succ(i)));
                }
            }
        }
        // An accepting run exists iff some cycle through an accepting node is
        // reachable; equivalently some cyclic SCC contains an accepting node.
        let sccs = tarjan_sccs(n * positions, |v| edges[v].iter().copied());
        let mut scc_sizes = HashMap::new();
        for (v, &c) in sccs.iter().enumerate() {
            if reachable[v] {
                *scc_sizes.entry(c).or_insert(0usize) += 1;
            }
        }
        for (v, &c) in sccs.iter().enumerate() {
            if !reachable[v] || !self.accepting[v / positions] {
                continue;
            }
            let cyclic = scc_sizes[&c] > 1 || edges[v].contains(&v);
            if cyclic {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// One Rabin acceptance pair: runs must visit `fin` finitely often and `inf`
/// infinitely often.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RabinPair {
    pub fin: BTreeSet<u32>,
    pub inf: BTreeSet<u32>,
}

/// Deterministic Rabin automaton; the transition function is total over the
/// alphabet.
#[derive(Debug, Clone)]
pub struct RabinAutomaton {
    pub ap: Vec<String>,
    pub alphabet: Alphabet,
    /// `transitions[state][symbol]` is the unique successor.
    pub transitions: Vec<Vec<u32>>,
    pub initial: u32,
    pub pairs: Vec<RabinPair>,
}

impl RabinAutomaton {
    pub fn state_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn step(&self, state: u32, symbol: usize) -> u32 {
        self.transitions[state as usize][symbol]
    }

    pub fn symbol_index(&self, s: PropSet) -> Result<usize> {
        self.alphabet
            .index_of(s)
            .ok_or_else(|| Error::Input("symbol outside the automaton alphabet".into()))
    }

    /// Projects a proposition set expressed over `table` onto this
    /// automaton's proposition order. Propositions unknown to the automaton
    /// are dropped; automaton propositions absent from `table` read as false.
    pub fn project_label(&self, label: PropSet, table: &PropTable) -> PropSet {
        let mut out = PropSet::EMPTY;
        for (bit, name) in self.ap.iter().enumerate() {
            if let Some(src) = table.index_of(name) {
                if label.contains(src) {
                    out.insert(bit);
                }
            }
        }
        out
    }

    /// Runs the unique run on `prefix . cycle^omega` to its eventual loop and
    /// checks the Rabin condition on the set of recurring states.
    pub fn accepts_lasso(&self, word: &LassoWord) -> Result<bool> {
        let mut state = self.initial;
        for &s in &word.prefix {
            state = self.step(state, self.symbol_index(s)?);
        }
        // Iterate whole cycles until the state at a cycle boundary repeats,
        // then collect every state visited along the repeating loop.
        let mut seen = HashMap::new();
        let mut boundaries = 0usize;
        loop {
            if let Some(&first) = seen.get(&state) {
                let loop_len = boundaries - first;
                let mut recurring = BTreeSet::new();
                let mut probe = state;
                for _ in 0..loop_len {
                    for &sym in &word.cycle {
                        probe = self.step(probe, self.symbol_index(sym)?);
                        recurring.insert(probe);
                    }
                }
                debug_assert_eq!(probe, state);
                return Ok(self.pairs.iter().any(|pair| {
                    recurring.is_disjoint(&pair.fin) && !recurring.is_disjoint(&pair.inf)
                }));
            }
            seen.insert(state, boundaries);
            boundaries += 1;
            for &s in &word.cycle {
                state = self.step(state, self.symbol_index(s)?);
            }
        }
    }

    /// Deletes transitions on symbols the environment can never emit, then
    /// removes states unreachable from the initial state. Pairs are
    /// intersected with the surviving states. The language over words built
    /// from `realizable` symbols is unchanged.
    pub fn restrict_alphabet(&self, realizable: &[PropSet]) -> Result<RabinAutomaton> {
        let alphabet = Alphabet::from_symbols(realizable.to_vec())?;
        let symbol_map: Vec<usize> = alphabet
            .symbols()
            .iter()
            .map(|&s| self.symbol_index(s))
            .collect::<Result<_>>()?;
        // Breadth-first reachability over the restricted alphabet.
        let mut order = Vec::new();
        let mut renumber: HashMap<u32, u32> = HashMap::new();
        let mut queue = VecDeque::new();
        renumber.insert(self.initial, 0);
        order.push(self.initial);
        queue.push_back(self.initial);
        while let Some(q) = queue.pop_front() {
            for &old_sym in &symbol_map {
                let t = self.transitions[q as usize][old_sym];
                if let std::collections::hash_map::Entry::Vacant(slot) = renumber.entry(t) {
                    slot.insert(order.len() as u32);
                    order.push(t);
                    queue.push_back(t);
                }
            }
        }
        let transitions = order
            .iter()
            .map(|&q| {
                symbol_map
                    .iter()
                    .map(|&old_sym| renumber[&self.transitions[q as usize][old_sym]])
                    .collect()
            })
            .collect();
        let remap = |set: &BTreeSet<u32>| {
            set.iter()
                .filter_map(|q| renumber.get(q).copied())
                .collect::<BTreeSet<u32>>()
        };
        let pairs = self
            .pairs
            .iter()
            .map(|p| RabinPair {
                fin: remap(&p.fin),
                inf: remap(&p.inf),
            })
            .collect();
        Ok(RabinAutomaton {
            ap: self.ap.clone(),
            alphabet,
            transitions,
            initial: 0,
            pairs,
        })
    }

    /// Structural sanity: transition targets in range, pair members declared.
    pub fn validate(&self) -> Result<()> {
        let n = self.state_count() as u32;
        if self.initial >= n {
            return Err(Error::Validation("initial state out of range".into()));
        }
        for (q, rows) in self.transitions.iter().enumerate() {
            if rows.len() != self.alphabet.len() {
                return Err(Error::Validation(format!(
                    "state {q} is not total over the alphabet"
                )));
            }
            if rows.iter().any(|&t| t >= n) {
                return Err(Error::Validation(format!(
                    "state {q} has a transition target out of range"
                )));
            }
        }
        for pair in &self.pairs {
            if pair.fin.iter().chain(pair.inf.iter()).any(|&q| q >= n) {
                return Err(Error::Validation(
                    "acceptance pair member out of range".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Full translation: normalize, build the Buchi automaton, determinize.
pub fn ltl_to_dra(
    formula: &Formula,
    table: &PropTable,
    alphabet: Alphabet,
    state_cap: usize,
) -> Result<RabinAutomaton> {
    let nba = ltl_to_nba(&formula.to_nnf(), table, alphabet)?;
    nba_to_dra(&nba, state_cap)
}

/// Tarjan's strongly connected components; returns the component id of each
/// node, ids assigned in reverse topological order of discovery.
pub(crate) fn tarjan_sccs<I>(n: usize, successors: impl Fn(usize) -> I) -> Vec<usize>
where
    I: Iterator<Item = usize>,
{
    const UNSET: usize = usize::MAX;
    let mut index = vec![UNSET; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSET; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut next_comp = 0usize;

    // Iterative Tarjan to avoid recursion limits on large products.
    enum Frame<I> {
        Enter(usize),
        Resume(usize, I),
    }
    for root in 0..n {
        if index[root] != UNSET {
            continue;
        }
        let mut call: Vec<Frame<I>> = vec![Frame::Enter(root)];
        while let Some(frame) = call.pop() {
            match frame {
                Frame::Enter(v) => {
                    index[v] = next_index;
                    low[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                    call.push(Frame::Resume(v, successors(v)));
                }
                Frame::Resume(v, mut iter) => {
                    let mut descended = false;
                    while let Some(w) = iter.next() {
                        if index[w] == UNSET {
                            call.push(Frame::Resume(v, iter));
                            call.push(Frame::Enter(w));
                            descended = true;
                            break;
                        } else if on_stack[w] {
                            low[v] = low[v].min(index[w]);
                        }
                    }
                    if descended {
                        continue;
                    }
                    if low[v] == index[v] {
                        loop {
                            let w = stack.pop().expect("tarjan stack underflow");
                            on_stack[w] = false;
                            comp[w] = next_comp;
                            if w == v {
                                break;
                            }
                        }
                        next_comp += 1;
                    }
                    // Propagate lowlink to the parent frame.
                    if let Some(Frame::Resume(parent, _)) = call.last() {
                        let parent = *parent;
                        low[parent] = low[parent].min(low[v]);
                    }
                }
            }
        }
    }
    comp
}
