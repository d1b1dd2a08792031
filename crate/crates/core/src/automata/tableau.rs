//! Tableau translation from NNF formulas to nondeterministic Buchi automata.
//!
//! The node-expansion construction produces a generalized Buchi automaton
//! whose states carry the obligations discharged at the current position; a
//! counter product then degeneralizes it, and a cheap bisimulation quotient
//! plus useless-state pruning keep the result small before determinization.

use std::collections::{BTreeSet, HashMap};

use super::{tarjan_sccs, Alphabet, BuchiAutomaton};
use crate::error::{Error, Result};
use crate::ltl::Formula;
use crate::props::{PropSet, PropTable};

/// Max distinct subformulas handled by the bitset-based expansion.
const MAX_CLOSURE: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Node {
    True,
    False,
    Atom(usize),
    NegAtom(usize),
    And(usize, usize),
    Or(usize, usize),
    Next(usize),
    Until(usize, usize),
    Release(usize, usize),
}

// Hash-consed arena of NNF subformulas; sets of subformulas are u64 bitsets.
struct Arena {
    nodes: Vec<Node>,
    index: HashMap<Node, usize>,
}

impl Arena {
    fn new() -> Self {
        Arena {
            nodes: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn intern(&mut self, node: Node) -> Result<usize> {
        if let Some(&i) = self.index.get(&node) {
            return Ok(i);
        }
        if self.nodes.len() >= MAX_CLOSURE {
            return Err(Error::Capacity(format!(
                "formula closure exceeds {MAX_CLOSURE} distinct subformulas"
            )));
        }
        let i = self.nodes.len();
        self.nodes.push(node.clone());
        self.index.insert(node, i);
        Ok(i)
    }

    fn intern_formula(&mut self, f: &Formula, table: &PropTable) -> Result<usize> {
        let node = match f {
            Formula::True => Node::True,
            Formula::False => Node::False,
            Formula::Atom(name) => Node::Atom(table.index_of(name).ok_or_else(|| {
                Error::Validation(format!("proposition `{name}` is not declared"))
            })?),
            Formula::Not(inner) => match &**inner {
                Formula::Atom(name) => Node::NegAtom(table.index_of(name).ok_or_else(|| {
                    Error::Validation(format!("proposition `{name}` is not declared"))
                })?),
                _ => {
                    return Err(Error::Input(
                        "tableau construction requires negation normal form".into(),
                    ))
                }
            },
            Formula::And(a, b) => Node::And(
                self.intern_formula(a, table)?,
                self.intern_formula(b, table)?,
            ),
            Formula::Or(a, b) => Node::Or(
                self.intern_formula(a, table)?,
                self.intern_formula(b, table)?,
            ),
            Formula::Next(a) => Node::Next(self.intern_formula(a, table)?),
            Formula::Until(a, b) => Node::Until(
                self.intern_formula(a, table)?,
                self.intern_formula(b, table)?,
            ),
            Formula::Release(a, b) => Node::Release(
                self.intern_formula(a, table)?,
                self.intern_formula(b, table)?,
            ),
            Formula::Implies(_, _) | Formula::Eventually(_) | Formula::Always(_) => {
                return Err(Error::Input(
                    "tableau construction requires negation normal form".into(),
                ))
            }
        };
        self.intern(node)
    }
}

const INIT: usize = usize::MAX;

#[derive(Debug)]
struct GbaNode {
    old: u64,
    next: u64,
    incoming: BTreeSet<usize>,
}

// In-progress node of the expansion.
#[derive(Debug, Clone)]
struct Pending {
    incoming: BTreeSet<usize>,
    new: u64,
    old: u64,
    next: u64,
}

fn lowest_bit(set: u64) -> usize {
    set.trailing_zeros() as usize
}

fn expand(mut node: Pending, arena: &Arena, nodes: &mut Vec<GbaNode>) {
    loop {
        if node.new == 0 {
            // Fully processed: merge into an existing state or create one,
            // then expansion of the successor obligation continues from the
            // worklist maintained by the caller loop.
            if let Some(existing) = nodes
                .iter_mut()
                .find(|n| n.old == node.old && n.next == node.next)
            {
                existing.incoming.extend(node.incoming.iter().copied());
                return;
            }
            let id = nodes.len();
            nodes.push(GbaNode {
                old: node.old,
                next: node.next,
                incoming: node.incoming,
            });
            let successor = Pending {
                incoming: BTreeSet::from([id]),
                new: nodes[id].next,
                old: 0,
                next: 0,
            };
            expand(successor, arena, nodes);
            return;
        }
        let f = lowest_bit(node.new);
        let bit = 1u64 << f;
        node.new &= !bit;
        if node.old & bit != 0 {
            continue;
        }
        match arena.nodes[f] {
            Node::False => return, // inconsistent, discard
            Node::True => {
                node.old |= bit;
            }
            Node::Atom(p) => {
                // Discard on contradiction with an already-required !p.
                if let Some(&neg) = arena.index.get(&Node::NegAtom(p)) {
                    if node.old & (1 << neg) != 0 {
                        return;
                    }
                }
                node.old |= bit;
            }
            Node::NegAtom(p) => {
                if let Some(&pos) = arena.index.get(&Node::Atom(p)) {
                    if node.old & (1 << pos) != 0 {
                        return;
                    }
                }
                node.old |= bit;
            }
            Node::And(a, b) => {
                node.old |= bit;
                node.new |= (1 << a) | (1 << b);
            }
            Node::Next(a) => {
                node.old |= bit;
                node.next |= 1 << a;
            }
            Node::Or(a, b) => {
                node.old |= bit;
                let mut left = node.clone();
                left.new |= 1 << a;
                expand(left, arena, nodes);
                node.new |= 1 << b;
            }
            Node::Until(a, b) => {
                // a U b  =  b  or  (a and X(a U b))
                node.old |= bit;
                let mut keep = node.clone();
                keep.new |= 1 << a;
                keep.next |= bit;
                expand(keep, arena, nodes);
                node.new |= 1 << b;
            }
            Node::Release(a, b) => {
                // a R b  =  (a and b)  or  (b and X(a R b))
                node.old |= bit;
                let mut keep = node.clone();
                keep.new |= 1 << b;
                keep.next |= bit;
                expand(keep, arena, nodes);
                node.new |= (1 << a) | (1 << b);
            }
        }
    }
}

/// Translates an NNF formula into a Buchi automaton over the given alphabet.
///
/// The language of the result is exactly the set of words satisfying the
/// formula. Propositions of the table that the formula does not mention are
/// unconstrained.
pub fn ltl_to_nba(f: &Formula, table: &PropTable, alphabet: Alphabet) -> Result<BuchiAutomaton> {
    let mut arena = Arena::new();
    let root = arena.intern_formula(f, table)?;

    let mut nodes: Vec<GbaNode> = Vec::new();
    expand(
        Pending {
            incoming: BTreeSet::from([INIT]),
            new: 1 << root,
            old: 0,
            next: 0,
        },
        &arena,
        &mut nodes,
    );

    // Positive/negative atom requirements per node.
    let literal_masks: Vec<(PropSet, PropSet)> = nodes
        .iter()
        .map(|n| {
            let mut pos = PropSet::EMPTY;
            let mut neg = PropSet::EMPTY;
            for (i, sub) in arena.nodes.iter().enumerate() {
                if n.old & (1 << i) == 0 {
                    continue;
                }
                match sub {
                    Node::Atom(p) => pos.insert(*p),
                    Node::NegAtom(p) => neg.insert(*p),
                    _ => {}
                }
            }
            (pos, neg)
        })
        .collect();
    let matches = |node: usize, sym: PropSet| {
        let (pos, neg) = literal_masks[node];
        pos.minus(sym).is_empty() && sym.intersection(neg).is_empty()
    };

    // Acceptance sets, one per until subformula: nodes where the until is not
    // pending or already fulfilled.
    let untils: Vec<(usize, usize)> = arena
        .nodes
        .iter()
        .enumerate()
        .filter_map(|(i, n)| match n {
            Node::Until(_, b) => Some((i, *b)),
            _ => None,
        })
        .collect();
    let accepting_sets: Vec<Vec<bool>> = untils
        .iter()
        .map(|&(u, b)| {
            nodes
                .iter()
                .map(|n| n.old & (1 << u) == 0 || n.old & (1 << b) != 0)
                .collect()
        })
        .collect();
    let k = accepting_sets.len().max(1);
    let in_set = |set: usize, node: usize| {
        accepting_sets.get(set).map(|s| s[node]).unwrap_or(true) // no untils: every node accepting
    };

    // Degeneralized state space: a fresh initial state 0, then (node, counter)
    // pairs numbered node-major.
    let n_nodes = nodes.len();
    let state_of = |node: usize, counter: usize| 1 + node * k + counter;
    let state_count = 1 + n_nodes * k;
    let mut transitions: Vec<Vec<Vec<u32>>> = vec![vec![Vec::new(); alphabet.len()]; state_count];
    let mut accepting = vec![false; state_count];

    for (sym_idx, &sym) in alphabet.symbols().iter().enumerate() {
        // From the fresh initial state the first symbol enters any node that
        // carries the root obligation and matches the symbol.
        for (node, gn) in nodes.iter().enumerate() {
            if gn.incoming.contains(&INIT) && matches(node, sym) {
                transitions[0][sym_idx].push(state_of(node, 0) as u32);
            }
        }
        for (target, gn) in nodes.iter().enumerate() {
            if !matches(target, sym) {
                continue;
            }
            for &source in &gn.incoming {
                if source == INIT {
                    continue;
                }
                for counter in 0..k {
                    let next_counter = if in_set(counter, source) {
                        (counter + 1) % k
                    } else {
                        counter
                    };
                    transitions[state_of(source, counter)][sym_idx].push(state_of(
                        target,
                        next_counter,
                    )
                        as u32);
                }
            }
        }
    }
    for (node, _) in nodes.iter().enumerate() {
        if in_set(0, node) {
            accepting[state_of(node, 0)] = true;
        }
    }
    for rows in &mut transitions {
        for row in rows {
            row.sort_unstable();
            row.dedup();
        }
    }

    let nba = BuchiAutomaton {
        ap: table.names().to_vec(),
        alphabet,
        transitions,
        initial: vec![0],
        accepting,
    };
    Ok(reduce(&nba))
}

/// Language-preserving shrink: drop states that cannot reach an accepting
/// cycle, then merge bisimilar states by partition refinement.
pub(crate) fn reduce(nba: &BuchiAutomaton) -> BuchiAutomaton {
    let n = nba.state_count();
    let n_syms = nba.alphabet.len();

    // Forward reachability from initial states.
    let mut reachable = vec![false; n];
    let mut stack: Vec<usize> = nba.initial.iter().map(|&q| q as usize).collect();
    for &q in &nba.initial {
        reachable[q as usize] = true;
    }
    while let Some(q) = stack.pop() {
        for sym in 0..n_syms {
            for &t in nba.successors(q as u32, sym) {
                if !reachable[t as usize] {
                    reachable[t as usize] = true;
                    stack.push(t as usize);
                }
            }
        }
    }

    // Useful states: those able to reach a cyclic SCC containing an accepting
    // state. Accepting runs never leave the useful region.
    let sccs = tarjan_sccs(n, |v| {
        (0..n_syms).flat_map(move |sym| nba.successors(v as u32, sym).iter().map(|&t| t as usize))
    });
    let mut scc_size = HashMap::new();
    for &c in &sccs {
        *scc_size.entry(c).or_insert(0usize) += 1;
    }
    let mut useful = vec![false; n];
    for v in 0..n {
        if !nba.accepting[v] {
            continue;
        }
        let cyclic = scc_size[&sccs[v]] > 1
            || (0..n_syms).any(|sym| nba.successors(v as u32, sym).contains(&(v as u32)));
        if cyclic {
            useful[v] = true;
        }
    }
    // Backward closure over the transition relation.
    loop {
        let mut changed = false;
        for v in 0..n {
            if useful[v] {
                continue;
            }
            let hits = (0..n_syms).any(|sym| {
                nba.successors(v as u32, sym)
                    .iter()
                    .any(|&t| useful[t as usize])
            });
            if hits {
                useful[v] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let keep: Vec<usize> = (0..n).filter(|&v| reachable[v] && useful[v]).collect();
    if keep.is_empty() {
        // Empty language: a single non-accepting sink with no transitions.
        return BuchiAutomaton {
            ap: nba.ap.clone(),
            alphabet: nba.alphabet.clone(),
            transitions: vec![vec![Vec::new(); n_syms]],
            initial: vec![0],
            accepting: vec![false],
        };
    }
    let mut renumber = vec![usize::MAX; n];
    for (new, &old) in keep.iter().enumerate() {
        renumber[old] = new;
    }
    let mut transitions = Vec::with_capacity(keep.len());
    for &old in &keep {
        let rows = (0..n_syms)
            .map(|sym| {
                nba.successors(old as u32, sym)
                    .iter()
                    .filter(|&&t| renumber[t as usize] != usize::MAX)
                    .map(|&t| renumber[t as usize] as u32)
                    .collect::<Vec<u32>>()
            })
            .collect();
        transitions.push(rows);
    }
    let initial: Vec<u32> = nba
        .initial
        .iter()
        .filter(|&&q| renumber[q as usize] != usize::MAX)
        .map(|&q| renumber[q as usize] as u32)
        .collect();
    let accepting: Vec<bool> = keep.iter().map(|&old| nba.accepting[old]).collect();
    let pruned = BuchiAutomaton {
        ap: nba.ap.clone(),
        alphabet: nba.alphabet.clone(),
        transitions,
        initial,
        accepting,
    };
    quotient_bisimulation(&pruned)
}

// Merge states with identical acceptance flag and identical successor
// partitions, iterated to a fixpoint. Sound for NBA language equality.
fn quotient_bisimulation(nba: &BuchiAutomaton) -> BuchiAutomaton {
    let n = nba.state_count();
    let n_syms = nba.alphabet.len();
    let mut class: Vec<usize> = nba.accepting.iter().map(|&a| a as usize).collect();
    loop {
        let mut signatures: HashMap<(usize, Vec<BTreeSet<usize>>), usize> = HashMap::new();
        let mut next_class = vec![0usize; n];
        for v in 0..n {
            let sig: Vec<BTreeSet<usize>> = (0..n_syms)
                .map(|sym| {
                    nba.successors(v as u32, sym)
                        .iter()
                        .map(|&t| class[t as usize])
                        .collect()
                })
                .collect();
            let len = signatures.len();
            let id = *signatures.entry((class[v], sig)).or_insert(len);
            next_class[v] = id;
        }
        if next_class == class {
            break;
        }
        class = next_class;
    }
    let n_classes = class.iter().max().map(|&c| c + 1).unwrap_or(0);
    if n_classes == n {
        return nba.clone();
    }
    let mut representative = vec![usize::MAX; n_classes];
    for v in 0..n {
        if representative[class[v]] == usize::MAX {
            representative[class[v]] = v;
        }
    }
    let transitions: Vec<Vec<Vec<u32>>> = (0..n_classes)
        .map(|c| {
            let v = representative[c];
            (0..n_syms)
                .map(|sym| {
                    let mut row: Vec<u32> = nba
                        .successors(v as u32, sym)
                        .iter()
                        .map(|&t| class[t as usize] as u32)
                        .collect();
                    row.sort_unstable();
                    row.dedup();
                    row
                })
                .collect()
        })
        .collect();
    let mut initial: Vec<u32> = nba
        .initial
        .iter()
        .map(|&q| class[q as usize] as u32)
        .collect();
    initial.sort_unstable();
    initial.dedup();
    let accepting: Vec<bool> = (0..n_classes)
        .map(|c| nba.accepting[representative[c]])
        .collect();
    BuchiAutomaton {
        ap: nba.ap.clone(),
        alphabet: nba.alphabet.clone(),
        transitions,
        initial,
        accepting,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{parse_ltl, LassoWord};

    fn build(text: &str, props: &[&str]) -> BuchiAutomaton {
        let table = PropTable::new(props.iter().copied()).unwrap();
        let alphabet = Alphabet::full(table.len(), 1 << 12).unwrap();
        ltl_to_nba(&parse_ltl(text).unwrap().to_nnf(), &table, alphabet).unwrap()
    }

    fn all_lassos(n_props: usize, max_prefix: usize, max_cycle: usize) -> Vec<LassoWord> {
        let symbols: Vec<PropSet> = (0..(1u32 << n_props)).map(PropSet::from_bits).collect();
        let mut words = Vec::new();
        let seqs_of = |len: usize| -> Vec<Vec<PropSet>> {
            let mut out = vec![vec![]];
            for _ in 0..len {
                out = out
                    .into_iter()
                    .flat_map(|seq| {
                        symbols.iter().map(move |&s| {
                            let mut next = seq.clone();
                            next.push(s);
                            next
                        })
                    })
                    .collect();
            }
            out
        };
        for plen in 0..=max_prefix {
            for clen in 1..=max_cycle {
                for prefix in seqs_of(plen) {
                    for cycle in seqs_of(clen) {
                        words.push(LassoWord::new(prefix.clone(), cycle).unwrap());
                    }
                }
            }
        }
        words
    }

    #[test]
    fn single_atom_checks_first_symbol() {
        let nba = build("a", &["a"]);
        let table = PropTable::new(["a"]).unwrap();
        let a = table.set_of(["a"]).unwrap();
        for lasso in all_lassos(1, 2, 2) {
            let expected = lasso.at(0) == a;
            assert_eq!(nba.accepts_lasso(&lasso).unwrap(), expected, "{lasso:?}");
        }
    }

    #[test]
    fn false_has_empty_language() {
        let nba = build("false", &["a"]);
        for lasso in all_lassos(1, 2, 2) {
            assert!(!nba.accepts_lasso(&lasso).unwrap());
        }
    }

    #[test]
    fn recurrence_agrees_with_semantics() {
        let nba = build("G F a", &["a"]);
        let table = PropTable::new(["a"]).unwrap();
        let f = parse_ltl("G F a").unwrap();
        for lasso in all_lassos(1, 2, 3) {
            let expected = crate::ltl::eval_lasso(&f, &lasso, &table).unwrap();
            assert_eq!(nba.accepts_lasso(&lasso).unwrap(), expected, "{lasso:?}");
        }
    }

    #[test]
    fn tableau_agrees_with_semantics_on_small_formulas() {
        let table = PropTable::new(["a", "b"]).unwrap();
        let formulas = [
            "a U b",
            "a R b",
            "X a",
            "F (a && b)",
            "G (a -> X b)",
            "(a U b) || G a",
            "G F a && G F b",
            "!a U b",
        ];
        let lassos = all_lassos(2, 2, 2);
        for text in formulas {
            let f = parse_ltl(text).unwrap();
            let alphabet = Alphabet::full(2, 1 << 12).unwrap();
            let nba = ltl_to_nba(&f.to_nnf(), &table, alphabet).unwrap();
            for lasso in &lassos {
                let expected = crate::ltl::eval_lasso(&f, lasso, &table).unwrap();
                assert_eq!(
                    nba.accepts_lasso(lasso).unwrap(),
                    expected,
                    "{text} on {lasso:?}"
                );
            }
        }
    }

    #[test]
    fn non_nnf_input_is_rejected() {
        let table = PropTable::new(["a"]).unwrap();
        let alphabet = Alphabet::full(1, 1 << 12).unwrap();
        let f = parse_ltl("!(a U a)").unwrap();
        assert!(ltl_to_nba(&f, &table, alphabet).is_err());
    }
}
