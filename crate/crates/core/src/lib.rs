//! Control strategy synthesis for LTL missions on probabilistically observed,
//! probabilistically actuated graph environments.
//!
//! The pipeline: a mission formula is compiled to a deterministic Rabin
//! automaton (tableau construction, degeneralization, Safra determinization),
//! the environment is compiled to a labeled MDP over (vertex, observation)
//! states, the two are composed into a product MDP, and the maximum
//! probability of satisfying the mission is obtained by decomposing the
//! product into accepting maximal end components and solving a maximal
//! reachability problem. The resulting policy projects back to a reactive
//! control strategy on (vertex, observation) pairs, which can be executed in
//! a seeded Monte Carlo simulator.

pub mod automata;
pub mod env;
pub mod error;
pub mod ltl;
pub mod mdp;
pub mod product;
pub mod props;
pub mod sim;
pub mod synthesis;

pub use automata::{BuchiAutomaton, RabinAutomaton, RabinPair};
pub use env::{
    enumerate_observations, Environment, Model, MotionModel, ObservationModel, ObservationSet,
};
pub use error::{Error, Result};
pub use ltl::{Formula, LassoWord};
pub use mdp::{build_mdp, path_probability, FinitePath, LabeledMdp, SparseModel};
pub use product::{build_product, ProductMdp};
pub use props::{PropSet, PropTable};
pub use sim::{estimate_satisfaction, simulate, Estimate, Trace};
pub use synthesis::{
    accepting_mecs, build_product_policy, dead_states, find_mecs, induce_and_project,
    max_reachability, synthesize, ControlStrategy, EndComponent, ProductPolicy,
    ReachabilitySolution, Region, Synthesis,
};
