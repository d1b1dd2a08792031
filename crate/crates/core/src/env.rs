//! The partitioned environment, robot motion model, and probabilistic
//! observation model, plus the JSON model document they are loaded from.
//!
//! Identifiers are strings in the document and dense indices internally;
//! declaration order fixes the indices, so every downstream state numbering
//! is reproducible. Stored probabilities are never renormalized: a row that
//! does not sum to one is a modeling error, not noise.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::props::{PropSet, PropTable};

/// Row-sum and distribution-sum tolerance.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// Default cap on nondeterministically observable propositions per vertex.
pub const DEFAULT_OBSERVATION_CAP: usize = 20;

/// The environment graph: vertices, directed edges, propositions, start.
#[derive(Debug, Clone)]
pub struct Environment {
    vertices: Vec<String>,
    vertex_index: HashMap<String, usize>,
    edges: BTreeSet<(usize, usize)>,
    props: PropTable,
    initial: usize,
}

impl Environment {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertex_index.get(name).copied()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn props(&self) -> &PropTable {
        &self.props
    }

    pub fn initial_vertex(&self) -> usize {
        self.initial
    }
}

/// Motion primitives, per-vertex enabled sets, and the transition kernel.
#[derive(Debug, Clone)]
pub struct MotionModel {
    actions: Vec<String>,
    action_index: HashMap<String, usize>,
    enabled: Vec<Vec<usize>>,
    rows: BTreeMap<(usize, usize), Vec<(usize, f64)>>,
}

impl MotionModel {
    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn action_name(&self, a: usize) -> &str {
        &self.actions[a]
    }

    pub fn action_names(&self) -> &[String] {
        &self.actions
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.action_index.get(name).copied()
    }

    /// Actions enabled at `v`, in declaration order.
    pub fn enabled(&self, v: usize) -> &[usize] {
        &self.enabled[v]
    }

    /// Successor distribution of `(v, action)`; entries sorted by vertex and
    /// strictly positive.
    pub fn row(&self, v: usize, action: usize) -> Option<&[(usize, f64)]> {
        self.rows.get(&(v, action)).map(Vec::as_slice)
    }

    pub fn transition_prob(&self, v: usize, action: usize, to: usize) -> f64 {
        self.row(v, action)
            .map(|row| {
                row.iter()
                    .find(|&&(t, _)| t == to)
                    .map(|&(_, p)| p)
                    .unwrap_or(0.0)
            })
            .unwrap_or(0.0)
    }
}

/// Per-vertex observation probabilities; only positive entries are stored.
#[derive(Debug, Clone)]
pub struct ObservationModel {
    /// `probs[v]` lists `(proposition, probability)` sorted by proposition.
    probs: Vec<Vec<(usize, f64)>>,
}

impl ObservationModel {
    pub fn obs_prob(&self, v: usize, prop: usize) -> f64 {
        self.probs[v]
            .iter()
            .find(|&&(p, _)| p == prop)
            .map(|&(_, prob)| prob)
            .unwrap_or(0.0)
    }

    /// Propositions observable at `v` with positive probability.
    pub fn observable(&self, v: usize) -> &[(usize, f64)] {
        &self.probs[v]
    }
}

/// One possible observation at a vertex together with its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub vertex: usize,
    pub observed: PropSet,
    pub probability: f64,
}

/// A loaded and validated model document.
#[derive(Debug, Clone)]
pub struct Model {
    pub env: Environment,
    pub motion: MotionModel,
    pub obs: ObservationModel,
    /// Mission formula bundled with the model, if any.
    pub formula: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexDecl {
    id: String,
    edges: Vec<String>,
    enabled: Vec<String>,
    obs: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MotionDecl {
    from: String,
    action: String,
    to: String,
    prob: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    vertices: Vec<VertexDecl>,
    actions: Vec<String>,
    propositions: Vec<String>,
    initial: String,
    motion: Vec<MotionDecl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    formula: Option<String>,
}

/// Parses and validates a model document.
pub fn load_model(text: &str) -> Result<Model> {
    load_model_with_tolerance(text, PROB_TOLERANCE)
}

pub fn load_model_with_tolerance(text: &str, tolerance: f64) -> Result<Model> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    build_model(file, tolerance)
}

fn build_model(file: ModelFile, tolerance: f64) -> Result<Model> {
    let props = PropTable::new(file.propositions.clone())?;

    let mut vertex_index = HashMap::new();
    let mut vertices = Vec::new();
    for decl in &file.vertices {
        if vertex_index
            .insert(decl.id.clone(), vertices.len())
            .is_some()
        {
            return Err(Error::Validation(format!(
                "vertex `{}` declared twice",
                decl.id
            )));
        }
        vertices.push(decl.id.clone());
    }
    if vertices.is_empty() {
        return Err(Error::Validation("model declares no vertices".into()));
    }

    let mut action_index = HashMap::new();
    for (i, name) in file.actions.iter().enumerate() {
        if action_index.insert(name.clone(), i).is_some() {
            return Err(Error::Validation(format!("action `{name}` declared twice")));
        }
    }

    let initial = *vertex_index.get(&file.initial).ok_or_else(|| {
        Error::Validation(format!("initial vertex `{}` is not declared", file.initial))
    })?;

    let mut edges = BTreeSet::new();
    let mut enabled: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
    let mut probs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); vertices.len()];
    for decl in &file.vertices {
        let v = vertex_index[&decl.id];
        if decl.edges.is_empty() {
            return Err(Error::Validation(format!(
                "vertex `{}` has no outgoing edge",
                decl.id
            )));
        }
        for target in &decl.edges {
            let t = *vertex_index.get(target).ok_or_else(|| {
                Error::Validation(format!(
                    "vertex `{}` lists undeclared edge target `{target}`",
                    decl.id
                ))
            })?;
            if !edges.insert((v, t)) {
                return Err(Error::Validation(format!(
                    "edge ({}, {target}) declared twice",
                    decl.id
                )));
            }
        }
        if decl.enabled.is_empty() {
            return Err(Error::Validation(format!(
                "vertex `{}` enables no action",
                decl.id
            )));
        }
        let mut seen = BTreeSet::new();
        for name in &decl.enabled {
            let a = *action_index.get(name).ok_or_else(|| {
                Error::Validation(format!(
                    "vertex `{}` enables undeclared action `{name}`",
                    decl.id
                ))
            })?;
            if !seen.insert(a) {
                return Err(Error::Validation(format!(
                    "vertex `{}` enables action `{name}` twice",
                    decl.id
                )));
            }
        }
        enabled[v] = seen.into_iter().collect();
        for (prop_name, &p) in &decl.obs {
            let prop = props.index_of(prop_name).ok_or_else(|| {
                Error::Validation(format!(
                    "vertex `{}` observes undeclared proposition `{prop_name}`",
                    decl.id
                ))
            })?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Validation(format!(
                    "observation probability of `{prop_name}` at `{}` is {p}, outside [0,1]",
                    decl.id
                )));
            }
            if p > 0.0 {
                probs[v].push((prop, p));
            }
        }
        probs[v].sort_by_key(|&(prop, _)| prop);
    }

    let mut rows: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
    for decl in &file.motion {
        let v = *vertex_index.get(&decl.from).ok_or_else(|| {
            Error::Validation(format!(
                "motion row references undeclared vertex `{}`",
                decl.from
            ))
        })?;
        let t = *vertex_index.get(&decl.to).ok_or_else(|| {
            Error::Validation(format!(
                "motion row references undeclared vertex `{}`",
                decl.to
            ))
        })?;
        let a = *action_index.get(&decl.action).ok_or_else(|| {
            Error::Validation(format!(
                "motion row references undeclared action `{}`",
                decl.action
            ))
        })?;
        if !(0.0..=1.0).contains(&decl.prob) {
            return Err(Error::Validation(format!(
                "transition probability ({}, {}, {}) is {}, outside [0,1]",
                decl.from, decl.action, decl.to, decl.prob
            )));
        }
        if decl.prob == 0.0 {
            continue;
        }
        if !edges.contains(&(v, t)) {
            return Err(Error::Validation(format!(
                "motion row ({}, {}, {}) has positive probability but ({}, {}) is not an edge",
                decl.from, decl.action, decl.to, decl.from, decl.to
            )));
        }
        if !enabled[v].contains(&a) {
            return Err(Error::Validation(format!(
                "motion row ({}, {}, {}) uses an action not enabled at `{}`",
                decl.from, decl.action, decl.to, decl.from
            )));
        }
        let row = rows.entry((v, a)).or_default();
        if row.iter().any(|&(existing, _)| existing == t) {
            return Err(Error::Validation(format!(
                "motion row ({}, {}, {}) declared twice",
                decl.from, decl.action, decl.to
            )));
        }
        row.push((t, decl.prob));
    }
    for row in rows.values_mut() {
        row.sort_by_key(|&(t, _)| t);
    }

    // Every enabled action must carry a full distribution.
    for (v, vertex_name) in vertices.iter().enumerate() {
        for &a in &enabled[v] {
            let sum: f64 = rows
                .get(&(v, a))
                .map(|row| row.iter().map(|&(_, p)| p).sum())
                .unwrap_or(0.0);
            if (sum - 1.0).abs() > tolerance {
                return Err(Error::Validation(format!(
                    "transition probabilities for ({vertex_name}, {}) sum to {sum}, expected 1",
                    file.actions[a]
                )));
            }
        }
    }

    Ok(Model {
        env: Environment {
            vertices,
            vertex_index,
            edges,
            props,
            initial,
        },
        motion: MotionModel {
            actions: file.actions,
            action_index,
            enabled,
            rows,
        },
        obs: ObservationModel { probs },
        formula: file.formula,
    })
}

/// Serializes the model back into its document form. Loading the result
/// reproduces the same environment, motion model, and observation model.
pub fn save_model(model: &Model) -> String {
    let env = &model.env;
    let vertices = (0..env.vertex_count())
        .map(|v| VertexDecl {
            id: env.vertex_name(v).to_string(),
            edges: env
                .edges
                .iter()
                .filter(|&&(from, _)| from == v)
                .map(|&(_, to)| env.vertex_name(to).to_string())
                .collect(),
            enabled: model
                .motion
                .enabled(v)
                .iter()
                .map(|&a| model.motion.action_name(a).to_string())
                .collect(),
            obs: model
                .obs
                .observable(v)
                .iter()
                .map(|&(p, prob)| (env.props().name(p).to_string(), prob))
                .collect(),
        })
        .collect();
    let motion = model
        .motion
        .rows
        .iter()
        .flat_map(|(&(v, a), row)| row.iter().map(move |&(t, p)| (v, a, t, p)))
        .map(|(v, a, t, p)| MotionDecl {
            from: env.vertex_name(v).to_string(),
            action: model.motion.action_name(a).to_string(),
            to: env.vertex_name(t).to_string(),
            prob: p,
        })
        .collect();
    let file = ModelFile {
        vertices,
        actions: model.motion.actions.clone(),
        propositions: env.props().names().to_vec(),
        initial: env.vertex_name(env.initial).to_string(),
        motion,
        formula: model.formula.clone(),
    };
    serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
}

/// Enumerates the observation sets of a vertex with their probabilities.
///
/// Propositions with probability exactly 1 appear in every set and
/// probability exactly 0 in none; only strictly nondeterministic
/// propositions branch, and at most `cap` of them are allowed. Sets are
/// ordered by their member index sequences, lexicographically.
pub fn enumerate_observations(
    env: &Environment,
    obs: &ObservationModel,
    v: usize,
) -> Result<Vec<ObservationSet>> {
    enumerate_observations_with_cap(env, obs, v, DEFAULT_OBSERVATION_CAP)
}

pub fn enumerate_observations_with_cap(
    env: &Environment,
    obs: &ObservationModel,
    v: usize,
    cap: usize,
) -> Result<Vec<ObservationSet>> {
    if v >= env.vertex_count() {
        return Err(Error::Input(format!("vertex index {v} out of range")));
    }
    let mut certain = PropSet::EMPTY;
    let mut branching: Vec<(usize, f64)> = Vec::new();
    for &(prop, p) in obs.observable(v) {
        if p >= 1.0 {
            certain.insert(prop);
        } else {
            branching.push((prop, p));
        }
    }
    if branching.len() > cap {
        return Err(Error::Capacity(format!(
            "vertex `{}` has {} nondeterministically observable propositions, cap is {cap}",
            env.vertex_name(v),
            branching.len()
        )));
    }
    let mut sets = Vec::with_capacity(1 << branching.len());
    for mask in 0u64..(1u64 << branching.len()) {
        let mut observed = certain;
        let mut probability = 1.0;
        for (bit, &(prop, p)) in branching.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                observed.insert(prop);
                probability *= p;
            } else {
                probability *= 1.0 - p;
            }
        }
        if probability > 0.0 {
            sets.push(ObservationSet {
                vertex: v,
                observed,
                probability,
            });
        }
    }
    sets.sort_by(|a, b| {
        let ka: Vec<usize> = a.observed.iter().collect();
        let kb: Vec<usize> = b.observed.iter().collect();
        ka.cmp(&kb)
    });
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_vertex_doc() -> String {
        r#"{
            "vertices": [
                {"id": "v1", "edges": ["v2"], "enabled": ["go"], "obs": {}},
                {"id": "v2", "edges": ["v1"], "enabled": ["go"], "obs": {"a": 0.5}}
            ],
            "actions": ["go"],
            "propositions": ["a"],
            "initial": "v1",
            "motion": [
                {"from": "v1", "action": "go", "to": "v2", "prob": 1.0},
                {"from": "v2", "action": "go", "to": "v1", "prob": 1.0}
            ]
        }"#
        .to_string()
    }

    #[test]
    fn well_formed_document_loads() {
        let model = load_model(&two_vertex_doc()).unwrap();
        assert_eq!(model.env.vertex_count(), 2);
        assert_eq!(model.env.initial_vertex(), 0);
        assert_eq!(model.motion.action_count(), 1);
        assert_eq!(model.obs.obs_prob(1, 0), 0.5);
        assert!(model.env.has_edge(0, 1));
        assert!(!model.env.has_edge(0, 0));
    }

    #[test]
    fn broken_row_sum_names_vertex_and_action() {
        let doc = two_vertex_doc().replace(
            r#"{"from": "v1", "action": "go", "to": "v2", "prob": 1.0}"#,
            r#"{"from": "v1", "action": "go", "to": "v2", "prob": 0.9}"#,
        );
        match load_model(&doc) {
            Err(Error::Validation(msg)) => {
                assert!(msg.contains("v1") && msg.contains("go"), "{msg}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let doc = two_vertex_doc().replace("\"initial\"", "\"extra\": 1, \"initial\"");
        assert!(matches!(load_model(&doc), Err(Error::Parse { .. })));
    }

    #[test]
    fn undeclared_references_are_rejected() {
        let bad_edge = two_vertex_doc().replace(r#""edges": ["v2"]"#, r#""edges": ["v9"]"#);
        assert!(matches!(load_model(&bad_edge), Err(Error::Validation(_))));
        let bad_prop = two_vertex_doc().replace(r#""obs": {"a": 0.5}"#, r#""obs": {"z": 0.5}"#);
        assert!(matches!(load_model(&bad_prop), Err(Error::Validation(_))));
        let bad_initial = two_vertex_doc().replace(r#""initial": "v1""#, r#""initial": "vx""#);
        assert!(matches!(
            load_model(&bad_initial),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn motion_outside_edges_is_rejected() {
        let doc = two_vertex_doc().replace(
            r#"{"from": "v2", "action": "go", "to": "v1", "prob": 1.0}"#,
            r#"{"from": "v2", "action": "go", "to": "v2", "prob": 1.0}"#,
        );
        match load_model(&doc) {
            Err(Error::Validation(msg)) => assert!(msg.contains("edge"), "{msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn certain_proposition_forces_singleton_set() {
        let doc = two_vertex_doc().replace(r#""obs": {"a": 0.5}"#, r#""obs": {"a": 1.0}"#);
        let model = load_model(&doc).unwrap();
        let sets = enumerate_observations(&model.env, &model.obs, 1).unwrap();
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].observed, PropSet::singleton(0));
        assert_eq!(sets[0].probability, 1.0);
    }

    #[test]
    fn mixed_certain_and_branching_sets() {
        // pickup certain, observe9 with probability 0.4: {pickup} first.
        let doc = r#"{
            "vertices": [
                {"id": "v13", "edges": ["v13"], "enabled": ["go"],
                 "obs": {"pickup": 1.0, "observe9": 0.4}}
            ],
            "actions": ["go"],
            "propositions": ["pickup", "observe9"],
            "initial": "v13",
            "motion": [{"from": "v13", "action": "go", "to": "v13", "prob": 1.0}]
        }"#;
        let model = load_model(doc).unwrap();
        let sets = enumerate_observations(&model.env, &model.obs, 0).unwrap();
        assert_eq!(sets.len(), 2);
        assert_eq!(sets[0].observed, PropSet::singleton(0));
        assert!((sets[0].probability - 0.6).abs() < 1e-12);
        assert_eq!(sets[1].observed, PropSet::from_bits(0b11));
        assert!((sets[1].probability - 0.4).abs() < 1e-12);
    }

    #[test]
    fn two_branching_propositions_give_four_sets() {
        let doc = two_vertex_doc()
            .replace(r#""obs": {"a": 0.5}"#, r#""obs": {"a": 0.5, "b": 0.5}"#)
            .replace(r#""propositions": ["a"]"#, r#""propositions": ["a", "b"]"#);
        let model = load_model(&doc).unwrap();
        let sets = enumerate_observations(&model.env, &model.obs, 1).unwrap();
        assert_eq!(sets.len(), 4);
        for set in &sets {
            assert!((set.probability - 0.25).abs() < 1e-12);
        }
        let total: f64 = sets.iter().map(|s| s.probability).sum();
        assert!((total - 1.0).abs() < PROB_TOLERANCE);
        // Member-sequence order: {}, {a}, {a,b}, {b}.
        let shapes: Vec<Vec<usize>> = sets.iter().map(|s| s.observed.iter().collect()).collect();
        assert_eq!(shapes, vec![vec![], vec![0], vec![0, 1], vec![1]]);
    }

    #[test]
    fn observation_cap_is_enforced() {
        let doc = two_vertex_doc()
            .replace(r#""obs": {"a": 0.5}"#, r#""obs": {"a": 0.5, "b": 0.5}"#)
            .replace(r#""propositions": ["a"]"#, r#""propositions": ["a", "b"]"#);
        let model = load_model(&doc).unwrap();
        match enumerate_observations_with_cap(&model.env, &model.obs, 1, 1) {
            Err(Error::Capacity(msg)) => assert!(msg.contains("v2"), "{msg}"),
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn save_load_round_trip() {
        let model = load_model(&two_vertex_doc()).unwrap();
        let doc = save_model(&model);
        let again = load_model(&doc).unwrap();
        assert_eq!(model.env.vertices, again.env.vertices);
        assert_eq!(model.env.edges, again.env.edges);
        assert_eq!(model.env.props(), again.env.props());
        assert_eq!(model.env.initial, again.env.initial);
        assert_eq!(model.motion.actions, again.motion.actions);
        assert_eq!(model.motion.enabled, again.motion.enabled);
        assert_eq!(model.motion.rows, again.motion.rows);
        assert_eq!(model.obs.probs, again.obs.probs);
    }
}
