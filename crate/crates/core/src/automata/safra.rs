//! Safra's determinization of nondeterministic Buchi automata into
//! deterministic Rabin automata.
//!
//! States are Safra trees: ordered trees of named, possibly marked nodes
//! labeled with sets of Buchi states. Node names are stable while a node
//! lives (new nodes take the smallest free name), so the acceptance pair for
//! name `l` tracks one surviving node: `fin` collects the trees where `l` is
//! absent, `inf` the trees where `l` is marked. Tree identity includes names
//! and marks; the transition function and the smallest-free-name rule are
//! deterministic, so state numbering is reproducible across runs.

use std::collections::{BTreeSet, HashMap, VecDeque};

use super::{BuchiAutomaton, RabinAutomaton, RabinPair};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct SafraNode {
    name: u32,
    label: BTreeSet<u32>,
    marked: bool,
    children: Vec<SafraNode>,
}

// A missing root is the rejecting sink reached when every run dies.
type SafraTree = Option<SafraNode>;

// Canonical preorder serialization used for state identity.
type TreeKey = Vec<(u32, bool, Vec<u32>, u32)>;

fn tree_key(tree: &SafraTree) -> TreeKey {
    let mut key = Vec::new();
    fn walk(node: &SafraNode, key: &mut TreeKey) {
        key.push((
            node.name,
            node.marked,
            node.label.iter().copied().collect(),
            node.children.len() as u32,
        ));
        for child in &node.children {
            walk(child, key);
        }
    }
    if let Some(root) = tree {
        walk(root, &mut key);
    }
    key
}

fn unmark(node: &mut SafraNode) {
    node.marked = false;
    for child in &mut node.children {
        unmark(child);
    }
}

fn collect_names(node: &SafraNode, names: &mut BTreeSet<u32>) {
    names.insert(node.name);
    for child in &node.children {
        collect_names(child, names);
    }
}

fn fresh_name(used: &mut BTreeSet<u32>, pool: u32) -> u32 {
    for name in 0..pool {
        if !used.contains(&name) {
            used.insert(name);
            return name;
        }
    }
    unreachable!("safra name pool of size {pool} exhausted");
}

// Step 2: every node whose label meets the accepting set spawns a youngest
// child holding that intersection. Only nodes of the incoming tree spawn.
fn branch_accepting(node: &mut SafraNode, accepting: &[bool], used: &mut BTreeSet<u32>, pool: u32) {
    let original_children = node.children.len();
    for i in 0..original_children {
        branch_accepting(&mut node.children[i], accepting, used, pool);
    }
    let hit: BTreeSet<u32> = node
        .label
        .iter()
        .copied()
        .filter(|&q| accepting[q as usize])
        .collect();
    if !hit.is_empty() {
        node.children.push(SafraNode {
            name: fresh_name(used, pool),
            label: hit,
            marked: false,
            children: Vec::new(),
        });
    }
}

// Step 3: replace every label by its powerset successor.
fn powerset(node: &mut SafraNode, nba: &BuchiAutomaton, symbol: usize) {
    let mut next = BTreeSet::new();
    for &q in &node.label {
        next.extend(nba.successors(q, symbol).iter().copied());
    }
    node.label = next;
    for child in &mut node.children {
        powerset(child, nba, symbol);
    }
}

fn remove_states(node: &mut SafraNode, states: &BTreeSet<u32>) {
    node.label.retain(|q| !states.contains(q));
    for child in &mut node.children {
        remove_states(child, states);
    }
}

// Step 4: among siblings, each state is kept only in the oldest subtree.
fn horizontal_merge(node: &mut SafraNode) {
    let mut claimed: BTreeSet<u32> = BTreeSet::new();
    for child in &mut node.children {
        remove_states(child, &claimed);
        claimed.extend(child.label.iter().copied());
    }
    for child in &mut node.children {
        horizontal_merge(child);
    }
}

// Step 5: drop empty nodes (their subtrees are empty by label containment).
fn remove_empty(node: &mut SafraNode) {
    node.children.retain(|c| !c.label.is_empty());
    for child in &mut node.children {
        remove_empty(child);
    }
}

// Step 6: a node whose children exactly cover it absorbs them and is marked.
fn vertical_merge(node: &mut SafraNode) {
    if !node.children.is_empty() {
        let mut union = BTreeSet::new();
        for child in &node.children {
            union.extend(child.label.iter().copied());
        }
        if union == node.label {
            node.children.clear();
            node.marked = true;
            return;
        }
    }
    for child in &mut node.children {
        vertical_merge(child);
    }
}

fn transition(tree: &SafraTree, nba: &BuchiAutomaton, symbol: usize, pool: u32) -> SafraTree {
    let root = tree.as_ref()?;
    let mut root = root.clone();
    unmark(&mut root);
    let mut used = BTreeSet::new();
    collect_names(&root, &mut used);
    branch_accepting(&mut root, &nba.accepting, &mut used, pool);
    powerset(&mut root, nba, symbol);
    horizontal_merge(&mut root);
    if root.label.is_empty() {
        return None;
    }
    remove_empty(&mut root);
    vertical_merge(&mut root);
    Some(root)
}

fn name_present(tree: &SafraTree, name: u32) -> bool {
    fn walk(node: &SafraNode, name: u32) -> bool {
        node.name == name || node.children.iter().any(|c| walk(c, name))
    }
    tree.as_ref().map(|r| walk(r, name)).unwrap_or(false)
}

fn name_marked(tree: &SafraTree, name: u32) -> bool {
    fn walk(node: &SafraNode, name: u32) -> bool {
        (node.name == name && node.marked) || node.children.iter().any(|c| walk(c, name))
    }
    tree.as_ref().map(|r| walk(r, name)).unwrap_or(false)
}

/// Determinizes a Buchi automaton into a language-equivalent deterministic
/// Rabin automaton, failing once more than `state_cap` tree states have been
/// materialized.
pub fn nba_to_dra(nba: &BuchiAutomaton, state_cap: usize) -> Result<RabinAutomaton> {
    let pool = (2 * nba.state_count().max(1)) as u32;
    let initial_label: BTreeSet<u32> = nba.initial.iter().copied().collect();
    let initial_tree: SafraTree = if initial_label.is_empty() {
        None
    } else {
        Some(SafraNode {
            name: 0,
            label: initial_label,
            marked: false,
            children: Vec::new(),
        })
    };

    let mut trees: Vec<SafraTree> = Vec::new();
    let mut ids: HashMap<TreeKey, u32> = HashMap::new();
    let mut transitions: Vec<Vec<u32>> = Vec::new();
    let mut queue = VecDeque::new();

    ids.insert(tree_key(&initial_tree), 0);
    trees.push(initial_tree);
    queue.push_back(0u32);

    while let Some(state) = queue.pop_front() {
        let mut row = Vec::with_capacity(nba.alphabet.len());
        for symbol in 0..nba.alphabet.len() {
            let next = transition(&trees[state as usize], nba, symbol, pool);
            let key = tree_key(&next);
            let id = match ids.get(&key) {
                Some(&id) => id,
                None => {
                    if trees.len() >= state_cap {
                        return Err(Error::Capacity(format!(
                            "determinization exceeded the cap of {state_cap} states"
                        )));
                    }
                    let id = trees.len() as u32;
                    ids.insert(key, id);
                    trees.push(next);
                    queue.push_back(id);
                    id
                }
            };
            row.push(id);
        }
        transitions.push(row);
    }

    let mut pairs = Vec::new();
    for name in 0..pool {
        let inf: BTreeSet<u32> = (0..trees.len() as u32)
            .filter(|&s| name_marked(&trees[s as usize], name))
            .collect();
        if inf.is_empty() {
            continue;
        }
        let fin: BTreeSet<u32> = (0..trees.len() as u32)
            .filter(|&s| !name_present(&trees[s as usize], name))
            .collect();
        pairs.push(RabinPair { fin, inf });
    }

    Ok(RabinAutomaton {
        ap: nba.ap.clone(),
        alphabet: nba.alphabet.clone(),
        transitions,
        initial: 0,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{ltl_to_nba, Alphabet};
    use crate::ltl::{eval_lasso, parse_ltl, LassoWord};
    use crate::props::{PropSet, PropTable};

    fn all_lassos(n_props: usize, max_prefix: usize, max_cycle: usize) -> Vec<LassoWord> {
        let symbols: Vec<PropSet> = (0..(1u32 << n_props)).map(PropSet::from_bits).collect();
        let seqs = |len: usize| -> Vec<Vec<PropSet>> {
            let mut out = vec![vec![]];
            for _ in 0..len {
                out = out
                    .into_iter()
                    .flat_map(|seq: Vec<PropSet>| {
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
        let mut words = Vec::new();
        for plen in 0..=max_prefix {
            for clen in 1..=max_cycle {
                for prefix in seqs(plen) {
                    for cycle in seqs(clen) {
                        words.push(LassoWord::new(prefix.clone(), cycle).unwrap());
                    }
                }
            }
        }
        words
    }

    fn dra_for(text: &str, props: &[&str]) -> RabinAutomaton {
        let table = PropTable::new(props.iter().copied()).unwrap();
        let alphabet = Alphabet::full(table.len(), 1 << 12).unwrap();
        let nba = ltl_to_nba(&parse_ltl(text).unwrap().to_nnf(), &table, alphabet).unwrap();
        nba_to_dra(&nba, 1_000_000).unwrap()
    }

    #[test]
    fn eventually_agrees_exhaustively() {
        let dra = dra_for("F a", &["a"]);
        dra.validate().unwrap();
        let table = PropTable::new(["a"]).unwrap();
        let f = parse_ltl("F a").unwrap();
        for lasso in all_lassos(1, 3, 3) {
            let expected = eval_lasso(&f, &lasso, &table).unwrap();
            assert_eq!(dra.accepts_lasso(&lasso).unwrap(), expected, "{lasso:?}");
        }
    }

    #[test]
    fn empty_language_has_no_satisfiable_pair() {
        let dra = dra_for("false", &["a"]);
        for lasso in all_lassos(1, 2, 2) {
            assert!(!dra.accepts_lasso(&lasso).unwrap());
        }
    }

    #[test]
    fn recurrence_conjunction_agrees_exhaustively() {
        let dra = dra_for("G F a && G F b", &["a", "b"]);
        dra.validate().unwrap();
        let table = PropTable::new(["a", "b"]).unwrap();
        let f = parse_ltl("G F a && G F b").unwrap();
        for lasso in all_lassos(2, 2, 3) {
            let expected = eval_lasso(&f, &lasso, &table).unwrap();
            assert_eq!(dra.accepts_lasso(&lasso).unwrap(), expected, "{lasso:?}");
        }
        // The canonical witness and a counterexample from the recurrence pair.
        let table_sets = |names: &[&str]| table.set_of(names.iter().copied()).unwrap();
        let alternating =
            LassoWord::new(vec![], vec![table_sets(&["a"]), table_sets(&["b"])]).unwrap();
        assert!(dra.accepts_lasso(&alternating).unwrap());
        let only_a = LassoWord::new(vec![], vec![table_sets(&["a"])]).unwrap();
        assert!(!dra.accepts_lasso(&only_a).unwrap());
    }

    #[test]
    fn state_cap_is_enforced() {
        let table = PropTable::new(["a", "b"]).unwrap();
        let alphabet = Alphabet::full(2, 1 << 12).unwrap();
        let nba = ltl_to_nba(
            &parse_ltl("G F a && G F b").unwrap().to_nnf(),
            &table,
            alphabet,
        )
        .unwrap();
        assert!(matches!(nba_to_dra(&nba, 2), Err(Error::Capacity(_))));
    }

    #[test]
    fn until_and_next_agree_exhaustively() {
        let table = PropTable::new(["a", "b"]).unwrap();
        for text in ["a U b", "X (a R b)", "a U (b U a)", "G (a -> X b)"] {
            let dra = dra_for(text, &["a", "b"]);
            let f = parse_ltl(text).unwrap();
            for lasso in all_lassos(2, 2, 2) {
                let expected = eval_lasso(&f, &lasso, &table).unwrap();
                assert_eq!(
                    dra.accepts_lasso(&lasso).unwrap(),
                    expected,
                    "{text} {lasso:?}"
                );
            }
        }
    }
}
