//! Seeded Monte Carlo execution of a control strategy in the environment.
//!
//! The generator is ChaCha8 seeded from a 64-bit value; episode `k` of an
//! estimation run uses `base_seed + k`, so every trace is reproducible across
//! platforms. Episodes are independent: each owns its strategy instance and
//! generator, so they can run concurrently if a caller chooses to.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::automata::RabinAutomaton;
use crate::env::{enumerate_observations, Model, ObservationSet};
use crate::error::{Error, Result};
use crate::mdp::LabeledMdp;
use crate::props::PropSet;
use crate::synthesis::{induce_and_project, ControlStrategy, Region, Synthesis};

/// Name of the generator recorded in reports and trace headers.
pub const GENERATOR: &str = "chacha8";

/// One executed step: the vertex, what was observed there, the action taken,
/// and the product state the strategy reached.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub vertex: usize,
    pub observed: PropSet,
    pub action: usize,
    pub product_state: usize,
    pub region: Region,
}

/// A recorded episode.
#[derive(Debug, Clone)]
pub struct Trace {
    pub seed: u64,
    pub steps: Vec<TraceStep>,
    /// First step index whose product state lies in an accepting component.
    pub entered_amec: Option<usize>,
}

impl Trace {
    /// The observed word: one proposition set per step.
    pub fn word(&self) -> Vec<PropSet> {
        self.steps.iter().map(|s| s.observed).collect()
    }

    /// Line-oriented rendering: `t vertex {obs} action (v,Z,q) region`.
    pub fn render(&self, model: &Model, mdp: &LabeledMdp, synthesis: &Synthesis) -> String {
        let props = model.env.props();
        let mut out = format!("# seed {} generator {}\n", self.seed, GENERATOR);
        for (t, step) in self.steps.iter().enumerate() {
            let vertex = model.env.vertex_name(step.vertex);
            let (s, q) = synthesis.product.back_map(step.product_state);
            out.push_str(&format!(
                "{t} {vertex} {} {} ({},{},q{q}) {}\n",
                props.render(step.observed),
                model.motion.action_name(step.action),
                mdp.vertex_name(mdp.vertex(s)),
                props.render(mdp.label(s)),
                step.region
            ));
        }
        out
    }
}

fn draw_vertex<R: Rng>(rng: &mut R, row: &[(usize, f64)]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(vertex, p) in row {
        acc += p;
        if u < acc {
            return vertex;
        }
    }
    row.last().expect("nonempty distribution").0
}

fn draw_observation<R: Rng>(rng: &mut R, sets: &[ObservationSet]) -> PropSet {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for set in sets {
        acc += set.probability;
        if u < acc {
            return set.observed;
        }
    }
    sets.last().expect("nonempty observation list").observed
}

/// Runs one episode of `horizon` steps from the initial vertex: sample an
/// observation, query the strategy, sample the successor under the chosen
/// action, repeat. Fully reproducible from the seed.
pub fn simulate(
    model: &Model,
    strategy: &mut ControlStrategy<'_>,
    seed: u64,
    horizon: usize,
) -> Result<Trace> {
    if horizon == 0 {
        return Err(Error::Input("horizon must be at least 1".into()));
    }
    let mut observations = Vec::with_capacity(model.env.vertex_count());
    for v in 0..model.env.vertex_count() {
        observations.push(enumerate_observations(&model.env, &model.obs, v)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertex = model.env.initial_vertex();
    let mut steps = Vec::with_capacity(horizon);
    let mut entered_amec = None;
    for t in 0..horizon {
        let observed = draw_observation(&mut rng, &observations[vertex]);
        let action = strategy.act(vertex, observed)?;
        let product_state = strategy
            .current_product_state()
            .expect("strategy has acted");
        let region = strategy.region().expect("strategy has acted");
        if entered_amec.is_none() && matches!(region, Region::Amec(_)) {
            entered_amec = Some(t);
        }
        steps.push(TraceStep {
            vertex,
            observed,
            action,
            product_state,
            region,
        });
        let row = model
            .motion
            .row(vertex, action)
            .expect("strategy actions are enabled");
        vertex = draw_vertex(&mut rng, row);
    }
    Ok(Trace {
        seed,
        steps,
        entered_amec,
    })
}

/// Empirical satisfaction estimate with a 95% Wilson confidence half-width.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub fraction: f64,
    pub half_width: f64,
    pub episodes: usize,
    pub horizon: usize,
    pub entered: usize,
    pub generator: &'static str,
}

/// 95% Wilson score half-width for `successes` out of `n`.
pub fn wilson_half_width(successes: usize, n: usize) -> f64 {
    let z = 1.959963984540054_f64;
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    z * ((p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt()) / (1.0 + z2 / n_f)
}

/// Fraction of episodes whose trace enters an accepting component within the
/// horizon. Entry is the finite-horizon proxy for satisfaction: once inside,
/// the round-robin rotation satisfies the mission with probability one.
/// Episode `k` runs on a fresh strategy instance with seed `base_seed + k`.
pub fn estimate_satisfaction(
    model: &Model,
    synthesis: &Synthesis,
    mdp: &LabeledMdp,
    dra: &RabinAutomaton,
    episodes: usize,
    horizon: usize,
    base_seed: u64,
) -> Result<Estimate> {
    if episodes == 0 {
        return Err(Error::Input("at least one episode is required".into()));
    }
    let mut entered = 0usize;
    for k in 0..episodes {
        let mut strategy = induce_and_project(synthesis, mdp, dra);
        let trace = simulate(model, &mut strategy, base_seed.wrapping_add(k as u64), horizon)?;
        if trace.entered_amec.is_some() {
            entered += 1;
        }
    }
    Ok(Estimate {
        fraction: entered as f64 / episodes as f64,
        half_width: wilson_half_width(entered, episodes),
        episodes,
        horizon,
        entered,
        generator: GENERATOR,
    })
}
