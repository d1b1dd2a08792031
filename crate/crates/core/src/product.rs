//! Synchronous product of a labeled MDP and a deterministic Rabin automaton,
//! with the acceptance pairs lifted onto product states.
//!
//! When pruning is on (the default) only states reachable from the support
//! of the initial distribution are materialized, numbered breadth-first and
//! tie-broken by (MDP state, automaton state). Without pruning the full
//! `|S| * |Q|` grid is materialized in (MDP state, automaton state) order,
//! which reproduces the structural size identities.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::automata::RabinAutomaton;
use crate::error::{Error, Result};
use crate::mdp::{ActionRows, LabeledMdp, SparseModel};

/// A lifted acceptance pair over product state indices.
#[derive(Debug, Clone)]
pub struct ProductPair {
    pub fin: BTreeSet<usize>,
    pub inf: BTreeSet<usize>,
}

/// The product MDP. Enabled actions and kernel rows mirror the MDP
/// component; the automaton component advances deterministically on the
/// label of the successor's MDP state.
#[derive(Debug, Clone)]
pub struct ProductMdp {
    /// Back-map: product state -> (MDP state, automaton state).
    back_map: Vec<(usize, u32)>,
    index: HashMap<(usize, u32), usize>,
    enabled: Vec<Vec<usize>>,
    rows: Vec<ActionRows>,
    initial: Vec<(usize, f64)>,
    pairs: Vec<ProductPair>,
}

impl ProductMdp {
    pub fn back_map(&self, state: usize) -> (usize, u32) {
        self.back_map[state]
    }

    pub fn state_of(&self, mdp_state: usize, aut_state: u32) -> Option<usize> {
        self.index.get(&(mdp_state, aut_state)).copied()
    }

    pub fn initial(&self) -> &[(usize, f64)] {
        &self.initial
    }

    pub fn pairs(&self) -> &[ProductPair] {
        &self.pairs
    }
}

impl SparseModel for ProductMdp {
    fn state_count(&self) -> usize {
        self.back_map.len()
    }

    fn enabled_actions(&self, state: usize) -> &[usize] {
        &self.enabled[state]
    }

    fn successors(&self, state: usize, action: usize) -> &[(usize, f64)] {
        self.rows[state]
            .iter()
            .find(|&&(a, _)| a == action)
            .map(|(_, row)| row.as_slice())
            .expect("action not enabled at product state")
    }
}

/// Builds the product. Every MDP label must translate to a symbol of the
/// automaton's alphabet; after restricting the automaton to the realizable
/// observation sets this holds by construction.
pub fn build_product(mdp: &LabeledMdp, dra: &RabinAutomaton, prune: bool) -> Result<ProductMdp> {
    // Symbol of each MDP state's label, resolved once.
    let mut symbols = Vec::with_capacity(mdp.state_count());
    for s in 0..mdp.state_count() {
        let projected = dra.project_label(mdp.label(s), mdp.props());
        let symbol = dra.alphabet.index_of(projected).ok_or_else(|| {
            Error::Input(format!(
                "label of MDP state {s} ({}) is outside the automaton alphabet",
                mdp.props().render(mdp.label(s))
            ))
        })?;
        symbols.push(symbol);
    }

    let mut back_map: Vec<(usize, u32)> = Vec::new();
    let mut index: HashMap<(usize, u32), usize> = HashMap::new();

    if prune {
        // Breadth-first from the initial support, tie-broken by (s, q).
        let mut queue = VecDeque::new();
        let mut initial_states: Vec<(usize, u32)> = mdp
            .initial()
            .iter()
            .map(|&(s, _)| (s, dra.step(dra.initial, symbols[s])))
            .collect();
        initial_states.sort_unstable();
        initial_states.dedup();
        for key in initial_states {
            index.insert(key, back_map.len());
            back_map.push(key);
            queue.push_back(key);
        }
        while let Some((s, q)) = queue.pop_front() {
            for &a in mdp.enabled_actions(s) {
                for &(s_next, _) in mdp.successors(s, a) {
                    let key = (s_next, dra.step(q, symbols[s_next]));
                    if let std::collections::hash_map::Entry::Vacant(slot) = index.entry(key) {
                        slot.insert(back_map.len());
                        back_map.push(key);
                        queue.push_back(key);
                    }
                }
            }
        }
    } else {
        for s in 0..mdp.state_count() {
            for q in 0..dra.state_count() as u32 {
                index.insert((s, q), back_map.len());
                back_map.push((s, q));
            }
        }
    }

    let mut enabled = Vec::with_capacity(back_map.len());
    let mut rows = Vec::with_capacity(back_map.len());
    for &(s, q) in &back_map {
        let actions = mdp.enabled_actions(s).to_vec();
        let mut state_rows = Vec::with_capacity(actions.len());
        for &a in &actions {
            let row: Vec<(usize, f64)> = mdp
                .successors(s, a)
                .iter()
                .map(|&(s_next, p)| {
                    let key = (s_next, dra.step(q, symbols[s_next]));
                    (index[&key], p)
                })
                .collect();
            let mut row = row;
            row.sort_by_key(|&(t, _)| t);
            state_rows.push((a, row));
        }
        enabled.push(actions);
        rows.push(state_rows);
    }

    let initial: Vec<(usize, f64)> = {
        let mut entries: Vec<(usize, f64)> = mdp
            .initial()
            .iter()
            .map(|&(s, p)| {
                let q = dra.step(dra.initial, symbols[s]);
                (index[&(s, q)], p)
            })
            .collect();
        entries.sort_by_key(|&(p, _)| p);
        entries
    };

    let pairs = dra
        .pairs
        .iter()
        .map(|pair| {
            let mut fin = BTreeSet::new();
            let mut inf = BTreeSet::new();
            for (p, &(_, q)) in back_map.iter().enumerate() {
                if pair.fin.contains(&q) {
                    fin.insert(p);
                }
                if pair.inf.contains(&q) {
                    inf.insert(p);
                }
            }
            ProductPair { fin, inf }
        })
        .collect();

    Ok(ProductMdp {
        back_map,
        index,
        enabled,
        rows,
        initial,
        pairs,
    })
}
