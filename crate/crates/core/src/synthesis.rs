//! Strategy synthesis on the product MDP: accepting maximal end components,
//! maximal reachability by value iteration, the optimal product policy, and
//! its projection to a reactive control strategy on (vertex, observation)
//! pairs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::automata::{tarjan_sccs, RabinAutomaton};
use crate::error::{Error, Result};
use crate::mdp::{LabeledMdp, SparseModel};
use crate::product::ProductMdp;
use crate::props::PropSet;

/// Default sup-norm convergence threshold for value iteration.
pub const DEFAULT_VI_EPSILON: f64 = 1e-10;

/// Default sweep budget for value iteration.
pub const DEFAULT_VI_MAX_SWEEPS: u64 = 1_000_000;

/// Tie window for selecting optimal actions.
const ACTION_TIE_WINDOW: f64 = 1e-8;

/// A sub-MDP that is closed and strongly connected: from every member state,
/// the allowed actions stay inside and every other member is reachable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndComponent {
    pub states: BTreeSet<usize>,
    /// Allowed actions per member state; nonempty, ascending.
    pub actions: BTreeMap<usize, Vec<usize>>,
}

impl EndComponent {
    /// Direct check of the defining properties against a model.
    pub fn check<M: SparseModel>(&self, model: &M) -> Result<()> {
        for (&s, actions) in &self.actions {
            if actions.is_empty() {
                return Err(Error::Validation(format!(
                    "end component state {s} allows no action"
                )));
            }
            for &a in actions {
                if !model.enabled_actions(s).contains(&a) {
                    return Err(Error::Validation(format!(
                        "end component state {s} allows disabled action {a}"
                    )));
                }
                for &(t, _) in model.successors(s, a) {
                    if !self.states.contains(&t) {
                        return Err(Error::Validation(format!(
                            "action {a} at state {s} leaves the end component"
                        )));
                    }
                }
            }
        }
        // Strong connectivity of the induced graph.
        for &start in &self.states {
            let mut reached = BTreeSet::from([start]);
            let mut queue = VecDeque::from([start]);
            while let Some(s) = queue.pop_front() {
                for &a in &self.actions[&s] {
                    for &(t, _) in model.successors(s, a) {
                        if reached.insert(t) {
                            queue.push_back(t);
                        }
                    }
                }
            }
            if reached != self.states {
                return Err(Error::Validation(format!(
                    "end component is not strongly connected from state {start}"
                )));
            }
        }
        Ok(())
    }
}

/// Maximal end components of the sub-MDP induced by
/// `restrict \ forbidden`, computed by iterated SCC refinement: actions
/// whose support leaves the current component are removed, states without
/// actions are removed, until stable. Output ordered by minimal state index.
pub fn find_mecs<M: SparseModel>(
    model: &M,
    restrict: Option<&BTreeSet<usize>>,
    forbidden: &BTreeSet<usize>,
) -> Vec<EndComponent> {
    let n = model.state_count();
    let mut alive: Vec<bool> = (0..n)
        .map(|s| restrict.is_none_or(|r| r.contains(&s)) && !forbidden.contains(&s))
        .collect();
    let mut action_alive: Vec<Vec<bool>> = (0..n)
        .map(|s| vec![alive[s]; model.enabled_actions(s).len()])
        .collect();

    // First pass: an action whose support leaves the alive set dies.
    let mut comp;
    loop {
        for s in 0..n {
            if !alive[s] {
                continue;
            }
            for (i, &a) in model.enabled_actions(s).iter().enumerate() {
                if action_alive[s][i] && model.successors(s, a).iter().any(|&(t, _)| !alive[t]) {
                    action_alive[s][i] = false;
                }
            }
        }
        comp = tarjan_sccs(n, |s| {
            let edges: Vec<usize> = if alive[s] {
                model
                    .enabled_actions(s)
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| action_alive[s][i])
                    .flat_map(|(_, &a)| model.successors(s, a).iter().map(|&(t, _)| t))
                    .collect()
            } else {
                Vec::new()
            };
            edges.into_iter()
        });
        let mut changed = false;
        for s in 0..n {
            if !alive[s] {
                continue;
            }
            for (i, &a) in model.enabled_actions(s).iter().enumerate() {
                if !action_alive[s][i] {
                    continue;
                }
                let leaks = model
                    .successors(s, a)
                    .iter()
                    .any(|&(t, _)| !alive[t] || comp[t] != comp[s]);
                if leaks {
                    action_alive[s][i] = false;
                    changed = true;
                }
            }
            if action_alive[s].iter().all(|&keep| !keep) {
                alive[s] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut groups: BTreeMap<usize, EndComponent> = BTreeMap::new();
    for s in 0..n {
        if !alive[s] {
            continue;
        }
        let actions: Vec<usize> = model
            .enabled_actions(s)
            .iter()
            .enumerate()
            .filter(|&(i, _)| action_alive[s][i])
            .map(|(_, &a)| a)
            .collect();
        let entry = groups.entry(comp[s]).or_insert_with(|| EndComponent {
            states: BTreeSet::new(),
            actions: BTreeMap::new(),
        });
        entry.states.insert(s);
        entry.actions.insert(s, actions);
    }
    let mut mecs: Vec<EndComponent> = groups.into_values().collect();
    mecs.sort_by_key(|ec| *ec.states.iter().next().expect("nonempty component"));
    mecs
}

/// An accepting maximal end component together with the Rabin pair that
/// certifies it.
#[derive(Debug, Clone)]
pub struct AcceptingMec {
    pub pair: usize,
    pub component: EndComponent,
}

/// For each acceptance pair, the maximal end components avoiding `fin` that
/// intersect `inf`, plus the union of all their states (the reachability
/// target). Overlapping components from different pairs are kept separately.
pub fn accepting_mecs(product: &ProductMdp) -> (Vec<AcceptingMec>, BTreeSet<usize>) {
    let mut accepted = Vec::new();
    let mut target = BTreeSet::new();
    for (pair_idx, pair) in product.pairs().iter().enumerate() {
        for component in find_mecs(product, None, &pair.fin) {
            if component.states.iter().any(|s| pair.inf.contains(s)) {
                target.extend(component.states.iter().copied());
                accepted.push(AcceptingMec {
                    pair: pair_idx,
                    component,
                });
            }
        }
    }
    (accepted, target)
}

/// States that cannot reach `target` under any policy: the complement of
/// backward reachability over the support graph.
pub fn dead_states<M: SparseModel>(model: &M, target: &BTreeSet<usize>) -> BTreeSet<usize> {
    let n = model.state_count();
    let mut predecessors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in 0..n {
        for &a in model.enabled_actions(s) {
            for &(t, _) in model.successors(s, a) {
                predecessors[t].push(s);
            }
        }
    }
    let mut reaches = vec![false; n];
    let mut queue: VecDeque<usize> = target.iter().copied().collect();
    for &b in target {
        reaches[b] = true;
    }
    while let Some(t) = queue.pop_front() {
        for &s in &predecessors[t] {
            if !reaches[s] {
                reaches[s] = true;
                queue.push_back(s);
            }
        }
    }
    (0..n).filter(|&s| !reaches[s]).collect()
}

/// Maximal reachability values and an optimal action per undecided state.
#[derive(Debug, Clone)]
pub struct ReachabilitySolution {
    pub values: Vec<f64>,
    pub target: BTreeSet<usize>,
    pub dead: BTreeSet<usize>,
    /// Defined exactly off `target` and `dead`.
    pub optimal_action: Vec<Option<usize>>,
    pub sweeps: u64,
    pub residual: f64,
    /// Whether every iterate was componentwise nondecreasing.
    pub monotone: bool,
}

/// Computes the least fixpoint of the Bellman operator with boundary values
/// 1 on `target` and 0 on `dead` by value iteration from zero, then selects
/// per state an optimal action, tie-broken toward the target.
///
/// Among actions whose backup is within `1e-8` of the maximum, the one whose
/// support minimizes the distance to `target` in the optimal-action graph is
/// chosen (then the smallest action id). A plain argmax can pick a
/// value-preserving self-loop that never progresses; the distance rule makes
/// the stationary policy proper. Values on states whose induced chain is
/// acyclic are then re-derived exactly by back-substitution.
pub fn max_reachability<M: SparseModel>(
    model: &M,
    target: &BTreeSet<usize>,
    dead: &BTreeSet<usize>,
    epsilon: f64,
    max_sweeps: u64,
) -> Result<ReachabilitySolution> {
    if !target.is_disjoint(dead) {
        return Err(Error::Input("target and dead sets must be disjoint".into()));
    }
    let n = model.state_count();
    let mut values = vec![0.0f64; n];
    for &b in target {
        values[b] = 1.0;
    }
    let undecided: Vec<usize> = (0..n)
        .filter(|s| !target.contains(s) && !dead.contains(s))
        .collect();

    let backup = |s: usize, values: &[f64]| -> f64 {
        model
            .enabled_actions(s)
            .iter()
            .map(|&a| {
                model
                    .successors(s, a)
                    .iter()
                    .map(|&(t, p)| p * values[t])
                    .sum::<f64>()
            })
            .fold(0.0f64, f64::max)
    };

    let mut monotone = true;
    let mut sweeps = 0u64;
    let mut delta = f64::INFINITY;
    while delta > epsilon {
        if sweeps >= max_sweeps {
            return Err(Error::Solver {
                residual: delta,
                iterations: sweeps,
            });
        }
        delta = 0.0;
        for &s in &undecided {
            let new = backup(s, &values);
            if new < values[s] - 1e-15 {
                monotone = false;
            }
            delta = delta.max((new - values[s]).abs());
            values[s] = new;
        }
        sweeps += 1;
    }

    // Optimal action sets within the tie window.
    let optimal_sets: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            if target.contains(&s) || dead.contains(&s) {
                return Vec::new();
            }
            let best = backup(s, &values);
            model
                .enabled_actions(s)
                .iter()
                .copied()
                .filter(|&a| {
                    let q: f64 = model
                        .successors(s, a)
                        .iter()
                        .map(|&(t, p)| p * values[t])
                        .sum();
                    q >= best - ACTION_TIE_WINDOW
                })
                .collect()
        })
        .collect();

    // Distance to target inside the optimal-action support graph.
    let mut predecessors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, candidates) in optimal_sets.iter().enumerate() {
        for &a in candidates {
            for &(t, _) in model.successors(s, a) {
                predecessors[t].push(s);
            }
        }
    }
    let mut distance = vec![usize::MAX; n];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &b in target {
        distance[b] = 0;
        queue.push_back(b);
    }
    while let Some(t) = queue.pop_front() {
        for &s in &predecessors[t] {
            if distance[s] == usize::MAX {
                distance[s] = distance[t] + 1;
                queue.push_back(s);
            }
        }
    }

    let mut optimal_action: Vec<Option<usize>> = vec![None; n];
    for (s, candidates) in optimal_sets.iter().enumerate() {
        if candidates.is_empty() {
            continue;
        }
        let mut best: Option<(usize, usize)> = None; // (action distance, action)
        for &a in candidates {
            let reach = model
                .successors(s, a)
                .iter()
                .map(|&(t, _)| distance[t])
                .min()
                .unwrap_or(usize::MAX);
            let action_distance = reach.saturating_add(1);
            if best.is_none_or(|(d, _)| action_distance < d) {
                best = Some((action_distance, a));
            }
        }
        optimal_action[s] = best.map(|(_, a)| a);
    }

    // Exact back-substitution where the induced chain is acyclic: process
    // condensation components of the chosen-action graph sinks-first and
    // re-derive singleton states without self-loops from final successors.
    let comp = tarjan_sccs(n, |s| {
        let edges: Vec<usize> = match optimal_action[s] {
            Some(a) => model.successors(s, a).iter().map(|&(t, _)| t).collect(),
            None => Vec::new(),
        };
        edges.into_iter()
    });
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &s in &undecided {
        members.entry(comp[s]).or_default().push(s);
    }
    for (_, group) in members {
        if group.len() != 1 {
            continue;
        }
        let s = group[0];
        let a = optimal_action[s].expect("undecided states carry an action");
        let row = model.successors(s, a);
        if row.iter().any(|&(t, _)| t == s) {
            continue;
        }
        values[s] = row.iter().map(|&(t, p)| p * values[t]).sum();
    }

    let residual = undecided
        .iter()
        .map(|&s| (backup(s, &values) - values[s]).abs())
        .fold(0.0f64, f64::max);

    Ok(ReachabilitySolution {
        values,
        target: target.clone(),
        dead: dead.clone(),
        optimal_action,
        sweeps,
        residual,
        monotone,
    })
}

/// Classification of a product state under the synthesized policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Transient,
    Amec(usize),
    Dead,
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Region::Transient => write!(f, "TRANSIENT"),
            Region::Amec(i) => write!(f, "AMEC#{i}"),
            Region::Dead => write!(f, "DEAD"),
        }
    }
}

/// The optimal product policy: stationary off the target, round-robin over
/// the allowed actions inside an accepting component. Policy tables are
/// immutable; the per-state visit counters live in the executing strategy.
#[derive(Debug, Clone)]
pub struct ProductPolicy {
    pub regions: Vec<Region>,
    /// Action for transient and dead states.
    pub stationary: Vec<Option<usize>>,
    /// Allowed action rotation for accepting-component states.
    pub round_robin: Vec<Option<Vec<usize>>>,
    pub amec_count: usize,
}

/// Assembles the policy: transient states follow the reachability maximizer,
/// accepting-component states rotate through their allowed actions per
/// visit, dead states take their lowest-index enabled action. States claimed
/// by several accepting components stay with the first in deterministic
/// order.
pub fn build_product_policy(
    solution: &ReachabilitySolution,
    amecs: &[AcceptingMec],
    product: &ProductMdp,
) -> ProductPolicy {
    let n = product.state_count();
    let mut regions = vec![Region::Transient; n];
    let mut round_robin: Vec<Option<Vec<usize>>> = vec![None; n];
    for (i, amec) in amecs.iter().enumerate() {
        for (&s, actions) in &amec.component.actions {
            if round_robin[s].is_none() {
                regions[s] = Region::Amec(i);
                round_robin[s] = Some(actions.clone());
            }
        }
    }
    let mut stationary = vec![None; n];
    for s in 0..n {
        match regions[s] {
            Region::Amec(_) => {}
            _ => {
                if solution.dead.contains(&s) {
                    regions[s] = Region::Dead;
                    stationary[s] = Some(product.enabled_actions(s)[0]);
                } else {
                    stationary[s] = solution.optimal_action[s];
                }
            }
        }
    }
    ProductPolicy {
        regions,
        stationary,
        round_robin,
        amec_count: amecs.len(),
    }
}

/// Everything the synthesis pipeline produces for one mission.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub product: ProductMdp,
    pub amecs: Vec<AcceptingMec>,
    pub target: BTreeSet<usize>,
    pub dead: BTreeSet<usize>,
    pub solution: ReachabilitySolution,
    pub policy: ProductPolicy,
    pub max_probability: f64,
}

/// Solver knobs for the synthesis pipeline.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub epsilon: f64,
    pub max_sweeps: u64,
    pub prune: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            epsilon: DEFAULT_VI_EPSILON,
            max_sweeps: DEFAULT_VI_MAX_SWEEPS,
            prune: true,
        }
    }
}

/// The probability of satisfying the mission from the initial distribution:
/// the initial-weighted sum of maximal reachability values toward the union
/// of accepting components.
pub fn max_satisfaction_probability(product: &ProductMdp, solution: &ReachabilitySolution) -> f64 {
    product
        .initial()
        .iter()
        .map(|&(p, mass)| mass * solution.values[p])
        .sum()
}

/// Runs the product-side pipeline: accepting components, dead states,
/// maximal reachability, policy.
pub fn synthesize(
    mdp: &LabeledMdp,
    dra: &RabinAutomaton,
    options: &SolverOptions,
) -> Result<Synthesis> {
    let product = crate::product::build_product(mdp, dra, options.prune)?;
    let (amecs, target) = accepting_mecs(&product);
    let dead = dead_states(&product, &target);
    let solution = max_reachability(
        &product,
        &target,
        &dead,
        options.epsilon,
        options.max_sweeps,
    )?;
    let policy = build_product_policy(&solution, &amecs, &product);
    let max_probability = max_satisfaction_probability(&product, &solution);
    Ok(Synthesis {
        product,
        amecs,
        target,
        dead,
        solution,
        policy,
        max_probability,
    })
}

/// Deterministic text rendering of the synthesized policy, one product state
/// per line with its back-map, region, action choice, and value.
pub fn policy_dump(synthesis: &Synthesis, mdp: &LabeledMdp) -> String {
    let mut out = String::new();
    let product = &synthesis.product;
    out.push_str(&format!(
        "product_states {}\nmax_probability {:.6}\n",
        product.state_count(),
        synthesis.max_probability
    ));
    for p in 0..product.state_count() {
        let (s, q) = product.back_map(p);
        let vertex = mdp.vertex_name(mdp.vertex(s));
        let obs = mdp.props().render(mdp.label(s));
        let region = synthesis.policy.regions[p];
        let action = match region {
            Region::Amec(_) => {
                let list = synthesis.policy.round_robin[p]
                    .as_ref()
                    .expect("accepting states carry a rotation");
                let names: Vec<&str> = list.iter().map(|&a| mdp.action_name(a)).collect();
                format!("actions=[{}]", names.join(","))
            }
            _ => {
                let a = synthesis.policy.stationary[p].expect("state carries an action");
                format!("action={}", mdp.action_name(a))
            }
        };
        out.push_str(&format!(
            "state {p} ({vertex},{obs},q{q}) {region} {action} x={:.6}\n",
            synthesis.solution.values[p]
        ));
    }
    out
}

/// A running control strategy: the finite memory is the automaton state plus
/// per-state round-robin counters. Instances are cheap and single-threaded;
/// the underlying policy tables are shared immutably.
#[derive(Debug)]
pub struct ControlStrategy<'a> {
    mdp: &'a LabeledMdp,
    dra: &'a RabinAutomaton,
    product: &'a ProductMdp,
    policy: &'a ProductPolicy,
    automaton_state: u32,
    counters: Vec<u32>,
    current: Option<usize>,
}

/// Builds the executable strategy induced by the product policy.
pub fn induce_and_project<'a>(
    synthesis: &'a Synthesis,
    mdp: &'a LabeledMdp,
    dra: &'a RabinAutomaton,
) -> ControlStrategy<'a> {
    ControlStrategy {
        mdp,
        dra,
        product: &synthesis.product,
        policy: &synthesis.policy,
        automaton_state: dra.initial,
        counters: vec![0; synthesis.product.state_count()],
        current: None,
    }
}

impl<'a> ControlStrategy<'a> {
    /// Consumes the observation made at `vertex` and returns the action to
    /// apply: the automaton advances on the observation, and the product
    /// policy selects at the resulting product state.
    pub fn act(&mut self, vertex: usize, observed: PropSet) -> Result<usize> {
        let s = self.mdp.state_of(vertex, observed).ok_or_else(|| {
            Error::Observation(format!(
                "observation {} is not possible at vertex `{}`",
                self.mdp.props().render(observed),
                self.mdp.vertex_name(vertex)
            ))
        })?;
        let projected = self.dra.project_label(observed, self.mdp.props());
        let symbol = self.dra.symbol_index(projected).map_err(|_| {
            Error::Observation(format!(
                "observation {} is outside the automaton alphabet",
                self.mdp.props().render(observed)
            ))
        })?;
        let next_q = self.dra.step(self.automaton_state, symbol);
        let p = self.product.state_of(s, next_q).ok_or_else(|| {
            Error::Observation(format!(
                "product state ({s}, q{next_q}) was not materialized; \
                 the observation sequence left the reachable product"
            ))
        })?;
        self.automaton_state = next_q;
        self.current = Some(p);
        let action = match self.policy.regions[p] {
            Region::Amec(_) => {
                let rotation = self.policy.round_robin[p]
                    .as_ref()
                    .expect("accepting states carry a rotation");
                let k = self.counters[p] as usize % rotation.len();
                self.counters[p] = self.counters[p].wrapping_add(1);
                rotation[k]
            }
            _ => self.policy.stationary[p].expect("state carries an action"),
        };
        Ok(action)
    }

    /// Product state reached by the last observation.
    pub fn current_product_state(&self) -> Option<usize> {
        self.current
    }

    /// Region of the last product state.
    pub fn region(&self) -> Option<Region> {
        self.current.map(|p| self.policy.regions[p])
    }
}
