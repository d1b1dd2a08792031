//! The labeled MDP over (vertex, observation) states and its construction
//! from the environment, motion, and observation models.
//!
//! The kernel is stored sparsely: a row per (state, enabled action) listing
//! strictly positive successors. Zero entries are never materialized.

use std::collections::HashMap;

use crate::env::{enumerate_observations_with_cap, Model, DEFAULT_OBSERVATION_CAP};
use crate::error::{Error, Result};
use crate::props::{PropSet, PropTable};

/// A successor distribution: strictly positive entries sorted by state.
pub type KernelRow = Vec<(usize, f64)>;

/// Kernel rows of one state, one entry per enabled action.
pub type ActionRows = Vec<(usize, KernelRow)>;

/// Read-only view shared by the labeled MDP and the product MDP; the
/// end-component, reachability, and dead-state algorithms are generic over
/// it so they can also run against hand-built test instances.
pub trait SparseModel {
    fn state_count(&self) -> usize;
    /// Enabled actions in ascending action-id order; never empty.
    fn enabled_actions(&self, state: usize) -> &[usize];
    /// Successor distribution for an enabled action; positive entries sorted
    /// by successor state.
    fn successors(&self, state: usize, action: usize) -> &[(usize, f64)];
}

/// MDP over states `(vertex, observation set)` labeled by the observation.
#[derive(Debug, Clone)]
pub struct LabeledMdp {
    /// Back-map to `(vertex, observed set)`, in construction order.
    states: Vec<(usize, PropSet)>,
    state_index: HashMap<(usize, PropSet), usize>,
    action_names: Vec<String>,
    enabled: Vec<Vec<usize>>,
    /// `rows[state]` holds `(action, successor distribution)` per enabled
    /// action, in enabled order.
    rows: Vec<ActionRows>,
    initial: Vec<(usize, f64)>,
    vertex_names: Vec<String>,
    props: PropTable,
}

impl LabeledMdp {
    pub fn label(&self, state: usize) -> PropSet {
        self.states[state].1
    }

    pub fn vertex(&self, state: usize) -> usize {
        self.states[state].0
    }

    pub fn state_of(&self, vertex: usize, observed: PropSet) -> Option<usize> {
        self.state_index.get(&(vertex, observed)).copied()
    }

    /// Initial distribution, positive entries sorted by state.
    pub fn initial(&self) -> &[(usize, f64)] {
        &self.initial
    }

    pub fn action_name(&self, action: usize) -> &str {
        &self.action_names[action]
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    pub fn vertex_name(&self, vertex: usize) -> &str {
        &self.vertex_names[vertex]
    }

    pub fn props(&self) -> &PropTable {
        &self.props
    }

    pub fn kernel(&self, state: usize, action: usize, to: usize) -> f64 {
        self.successors_opt(state, action)
            .and_then(|row| row.iter().find(|&&(t, _)| t == to))
            .map(|&(_, p)| p)
            .unwrap_or(0.0)
    }

    fn successors_opt(&self, state: usize, action: usize) -> Option<&[(usize, f64)]> {
        self.rows[state]
            .iter()
            .find(|&&(a, _)| a == action)
            .map(|(_, row)| row.as_slice())
    }

    /// Deterministic text listing of states, enabled actions, kernel rows,
    /// initial distribution, and labels. Used for golden-file regression.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("states {}\n", self.state_count()));
        for (s, &(v, obs)) in self.states.iter().enumerate() {
            out.push_str(&format!(
                "state {s} ({},{})\n",
                self.vertex_names[v],
                self.props.render(obs)
            ));
            for &(a, ref row) in &self.rows[s] {
                let entries: Vec<String> =
                    row.iter().map(|&(t, p)| format!("{t}:{p:.6}")).collect();
                out.push_str(&format!(
                    "  action {} -> {}\n",
                    self.action_names[a],
                    entries.join(" ")
                ));
            }
        }
        let init: Vec<String> = self
            .initial
            .iter()
            .map(|&(s, p)| format!("{s}:{p:.6}"))
            .collect();
        out.push_str(&format!("initial {}\n", init.join(" ")));
        out
    }

    /// Checks that every kernel row and the initial distribution sum to one.
    pub fn validate_distributions(&self, tolerance: f64) -> Result<()> {
        for (s, rows) in self.rows.iter().enumerate() {
            for &(a, ref row) in rows {
                let sum: f64 = row.iter().map(|&(_, p)| p).sum();
                if (sum - 1.0).abs() > tolerance {
                    return Err(Error::Validation(format!(
                        "kernel row for state {s}, action {} sums to {sum}",
                        self.action_names[a]
                    )));
                }
            }
        }
        let init_sum: f64 = self.initial.iter().map(|&(_, p)| p).sum();
        if (init_sum - 1.0).abs() > tolerance {
            return Err(Error::Validation(format!(
                "initial distribution sums to {init_sum}"
            )));
        }
        Ok(())
    }
}

impl SparseModel for LabeledMdp {
    fn state_count(&self) -> usize {
        self.states.len()
    }

    fn enabled_actions(&self, state: usize) -> &[usize] {
        &self.enabled[state]
    }

    fn successors(&self, state: usize, action: usize) -> &[(usize, f64)] {
        self.successors_opt(state, action)
            .expect("action not enabled at state")
    }
}

/// Builds the labeled MDP: one state per (vertex, observation set), kernel
/// entries `P_m(v,u,v') * Pr[observing Z' at v']`, initial mass on the start
/// vertex's observation sets, and each state labeled by its observation.
pub fn build_mdp(model: &Model) -> Result<LabeledMdp> {
    build_mdp_with_cap(model, DEFAULT_OBSERVATION_CAP)
}

pub fn build_mdp_with_cap(model: &Model, observation_cap: usize) -> Result<LabeledMdp> {
    let env = &model.env;
    let n_vertices = env.vertex_count();
    let mut observations = Vec::with_capacity(n_vertices);
    for v in 0..n_vertices {
        observations.push(enumerate_observations_with_cap(
            env,
            &model.obs,
            v,
            observation_cap,
        )?);
    }

    let mut states = Vec::new();
    let mut state_index = HashMap::new();
    for (v, sets) in observations.iter().enumerate() {
        for set in sets {
            state_index.insert((v, set.observed), states.len());
            states.push((v, set.observed));
        }
    }

    let mut enabled = Vec::with_capacity(states.len());
    let mut rows = Vec::with_capacity(states.len());
    for &(v, _) in &states {
        let actions = model.motion.enabled(v).to_vec();
        let mut state_rows = Vec::with_capacity(actions.len());
        for &a in &actions {
            let motion_row = model
                .motion
                .row(v, a)
                .expect("validated model has a row per enabled action");
            let mut row = Vec::new();
            for &(v_next, p_move) in motion_row {
                for obs_set in &observations[v_next] {
                    let target = state_index[&(v_next, obs_set.observed)];
                    row.push((target, p_move * obs_set.probability));
                }
            }
            row.sort_by_key(|&(t, _)| t);
            state_rows.push((a, row));
        }
        enabled.push(actions);
        rows.push(state_rows);
    }

    let v0 = env.initial_vertex();
    let initial: Vec<(usize, f64)> = observations[v0]
        .iter()
        .map(|set| (state_index[&(v0, set.observed)], set.probability))
        .collect();

    let mdp = LabeledMdp {
        states,
        state_index,
        action_names: model.motion.action_names().to_vec(),
        enabled,
        rows,
        initial,
        vertex_names: (0..n_vertices)
            .map(|v| env.vertex_name(v).to_string())
            .collect(),
        props: env.props().clone(),
    };
    debug_assert!(mdp
        .validate_distributions(crate::env::PROB_TOLERANCE)
        .is_ok());
    Ok(mdp)
}

/// A bare sparse MDP given directly by its enabled actions and kernel rows.
/// Used to run the end-component and reachability algorithms outside the
/// environment pipeline (oracle tests, benchmarks).
#[derive(Debug, Clone)]
pub struct SimpleMdp {
    enabled: Vec<Vec<usize>>,
    rows: Vec<ActionRows>,
}

impl SimpleMdp {
    /// `rows[state]` lists `(action, successor distribution)`; actions must
    /// be in ascending order and distributions sorted by successor.
    pub fn new(rows: Vec<ActionRows>) -> Result<Self> {
        let n = rows.len();
        let mut enabled = Vec::with_capacity(n);
        for (s, state_rows) in rows.iter().enumerate() {
            if state_rows.is_empty() {
                return Err(Error::Validation(format!("state {s} enables no action")));
            }
            let actions: Vec<usize> = state_rows.iter().map(|&(a, _)| a).collect();
            if actions.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Validation(format!(
                    "state {s} actions must be strictly ascending"
                )));
            }
            for &(a, ref row) in state_rows {
                if row.iter().any(|&(t, _)| t >= n) {
                    return Err(Error::Validation(format!(
                        "state {s} action {a} targets an out-of-range state"
                    )));
                }
                if row.iter().any(|&(_, p)| p <= 0.0) {
                    return Err(Error::Validation(format!(
                        "state {s} action {a} has a non-positive entry"
                    )));
                }
            }
            enabled.push(actions);
        }
        Ok(SimpleMdp { enabled, rows })
    }
}

impl SparseModel for SimpleMdp {
    fn state_count(&self) -> usize {
        self.rows.len()
    }

    fn enabled_actions(&self, state: usize) -> &[usize] {
        &self.enabled[state]
    }

    fn successors(&self, state: usize, action: usize) -> &[(usize, f64)] {
        self.rows[state]
            .iter()
            .find(|&&(a, _)| a == action)
            .map(|(_, row)| row.as_slice())
            .expect("action not enabled at state")
    }
}

/// A finite path: states visited and the actions taken between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePath {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
}

impl FinitePath {
    pub fn new(states: Vec<usize>, actions: Vec<usize>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Input(
                "a path must contain at least one state".into(),
            ));
        }
        if actions.len() + 1 != states.len() {
            return Err(Error::Input(
                "a path over n states must record n-1 actions".into(),
            ));
        }
        Ok(FinitePath { states, actions })
    }
}

/// Probability of a finite path: the initial mass of its first state times
/// the product of its transition probabilities.
pub fn path_probability(mdp: &LabeledMdp, path: &FinitePath) -> Result<f64> {
    let first = path.states[0];
    let mut probability = mdp
        .initial()
        .iter()
        .find(|&&(s, _)| s == first)
        .map(|&(_, p)| p)
        .unwrap_or(0.0);
    if probability <= 0.0 {
        return Err(Error::Input(format!(
            "path starts at state {first} which has no initial mass"
        )));
    }
    for (i, &action) in path.actions.iter().enumerate() {
        let from = path.states[i];
        let to = path.states[i + 1];
        if !mdp.enabled_actions(from).contains(&action) {
            return Err(Error::Input(format!(
                "action {action} is not enabled at state {from}"
            )));
        }
        let p = mdp.kernel(from, action, to);
        if p <= 0.0 {
            return Err(Error::Input(format!(
                "transition ({from}, {action}, {to}) has zero probability"
            )));
        }
        probability *= p;
    }
    Ok(probability)
}
