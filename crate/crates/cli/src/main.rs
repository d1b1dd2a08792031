//! Command-line front end: validate models, build MDPs, translate formulas,
//! build products, synthesize strategies, and simulate them.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use promis_core::automata::{
    export_hoa, import_hoa, ltl_to_dra, Alphabet, RabinAutomaton, DEFAULT_ALPHABET_CAP,
    DEFAULT_DRA_STATE_CAP,
};
use promis_core::env::{enumerate_observations, load_model_with_tolerance, Model, PROB_TOLERANCE};
use promis_core::ltl::parse_ltl;
use promis_core::mdp::{build_mdp, LabeledMdp, SparseModel};
use promis_core::product::build_product;
use promis_core::props::PropSet;
use promis_core::sim::{estimate_satisfaction, simulate, GENERATOR};
use promis_core::synthesis::{
    induce_and_project, policy_dump, synthesize, SolverOptions, Synthesis, DEFAULT_VI_EPSILON,
    DEFAULT_VI_MAX_SWEEPS,
};
use promis_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "promis",
    version,
    about = "Maximum-probability control strategies for LTL missions on probabilistic graph environments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArg {
    /// Path to the model document (JSON).
    #[arg(long)]
    model: PathBuf,

    /// Row-sum tolerance override (env: PROMIS_PROB_TOLERANCE).
    #[arg(long)]
    prob_tolerance: Option<f64>,
}

#[derive(Args, Clone)]
struct SpecArg {
    /// Mission formula; falls back to the model's `formula` key.
    #[arg(long)]
    formula: Option<String>,

    /// Import a Rabin automaton in HOA format instead of translating.
    #[arg(long, conflicts_with = "formula")]
    hoa_in: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Value-iteration convergence threshold (env: PROMIS_VI_EPSILON).
    #[arg(long)]
    vi_epsilon: Option<f64>,

    /// Keep the full |S|x|Q| product instead of pruning unreachable states.
    #[arg(long)]
    no_prune: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model document against the schema and model invariants.
    Validate {
        #[command(flatten)]
        model: ModelArg,
    },
    /// Build the labeled MDP over (vertex, observation) states.
    BuildMdp {
        #[command(flatten)]
        model: ModelArg,
        /// Print the deterministic state/kernel listing.
        #[arg(long)]
        dump: bool,
    },
    /// Translate a mission formula to a deterministic Rabin automaton.
    Translate {
        /// Model supplying the proposition table (optional).
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        spec: SpecArg,
        /// Write the automaton in HOA format.
        #[arg(long)]
        hoa_out: Option<PathBuf>,
    },
    /// Build the product MDP and report its structure.
    Product {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        spec: SpecArg,
        /// Print per-pair lifted member counts.
        #[arg(long)]
        stats: bool,
        #[arg(long)]
        no_prune: bool,
    },
    /// Compute the optimal strategy and the maximum satisfaction probability.
    Synthesize {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the policy dump to this path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print a machine-readable summary.
        #[arg(long)]
        json: bool,
    },
    /// Execute the synthesized strategy in the environment.
    Simulate {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        #[arg(long, default_value_t = 200)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write one trace file per episode into this directory.
        #[arg(long)]
        traces_out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

fn env_override(name: &str) -> Option<f64> {
    std::env::var(name).ok().and_then(|v| v.parse().ok())
}

fn prob_tolerance(explicit: Option<f64>) -> f64 {
    explicit
        .or_else(|| env_override("PROMIS_PROB_TOLERANCE"))
        .unwrap_or(PROB_TOLERANCE)
}

fn load(model: &ModelArg) -> Result<Model> {
    let text = std::fs::read_to_string(&model.model)?;
    load_model_with_tolerance(&text, prob_tolerance(model.prob_tolerance))
}

fn realizable_symbols(model: &Model) -> Result<Vec<PropSet>> {
    let mut symbols = BTreeSet::new();
    for v in 0..model.env.vertex_count() {
        for set in enumerate_observations(&model.env, &model.obs, v)? {
            symbols.insert(set.observed);
        }
    }
    Ok(symbols.into_iter().collect())
}

/// Automaton for a synthesis command: translate the mission formula over the
/// model's propositions, or import an HOA document, then restrict to the
/// observation sets the environment can emit.
fn automaton_for(model: &Model, spec: &SpecArg) -> Result<RabinAutomaton> {
    let dra = match &spec.hoa_in {
        Some(path) => import_hoa(&std::fs::read_to_string(path)?)?,
        None => {
            let text = spec
                .formula
                .clone()
                .or_else(|| model.formula.clone())
                .ok_or_else(|| {
                    Error::Input(
                        "no mission given: pass --formula/--hoa-in or add a `formula` key to the model"
                            .into(),
                    )
                })?;
            let formula = parse_ltl(&text)?;
            formula.check_atoms(model.env.props())?;
            let alphabet = Alphabet::full(model.env.props().len(), DEFAULT_ALPHABET_CAP)?;
            ltl_to_dra(&formula, model.env.props(), alphabet, DEFAULT_DRA_STATE_CAP)?
        }
    };
    dra.restrict_alphabet(&realizable_symbols(model)?)
}

fn solver_options(args: &SolverArgs) -> SolverOptions {
    SolverOptions {
        epsilon: args
            .vi_epsilon
            .or_else(|| env_override("PROMIS_VI_EPSILON"))
            .unwrap_or(DEFAULT_VI_EPSILON),
        max_sweeps: DEFAULT_VI_MAX_SWEEPS,
        prune: !args.no_prune,
    }
}

fn run_synthesis(
    model: &Model,
    spec: &SpecArg,
    solver: &SolverArgs,
) -> Result<(LabeledMdp, RabinAutomaton, Synthesis)> {
    let mdp = build_mdp(model)?;
    let dra = automaton_for(model, spec)?;
    let synthesis = synthesize(&mdp, &dra, &solver_options(solver))?;
    Ok((mdp, dra, synthesis))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Validate { model } => {
            let loaded = load(&model)?;
            let mdp = build_mdp(&loaded)?;
            mdp.validate_distributions(prob_tolerance(model.prob_tolerance))?;
            println!(
                "ok: {} vertices, {} actions, {} propositions, {} MDP states",
                loaded.env.vertex_count(),
                loaded.motion.action_count(),
                loaded.env.props().len(),
                mdp.state_count()
            );
        }
        Command::BuildMdp { model, dump } => {
            let loaded = load(&model)?;
            let mdp = build_mdp(&loaded)?;
            println!("mdp_states {}", mdp.state_count());
            if dump {
                print!("{}", mdp.dump());
            }
        }
        Command::Translate {
            model,
            spec,
            hoa_out,
        } => {
            let loaded = match &model {
                Some(path) => Some(load_model_with_tolerance(
                    &std::fs::read_to_string(path)?,
                    PROB_TOLERANCE,
                )?),
                None => None,
            };
            let dra = match &spec.hoa_in {
                Some(path) => import_hoa(&std::fs::read_to_string(path)?)?,
                None => {
                    let text = spec
                        .formula
                        .clone()
                        .or_else(|| loaded.as_ref().and_then(|m| m.formula.clone()))
                        .ok_or_else(|| Error::Input("pass --formula or --hoa-in".into()))?;
                    let formula = parse_ltl(&text)?;
                    let table = match &loaded {
                        Some(m) => {
                            formula.check_atoms(m.env.props())?;
                            m.env.props().clone()
                        }
                        None => promis_core::props::PropTable::new(formula.atoms())?,
                    };
                    let alphabet = Alphabet::full(table.len(), DEFAULT_ALPHABET_CAP)?;
                    ltl_to_dra(&formula, &table, alphabet, DEFAULT_DRA_STATE_CAP)?
                }
            };
            println!(
                "dra_states {}\ndra_pairs {}",
                dra.state_count(),
                dra.pairs.len()
            );
            if let Some(path) = hoa_out {
                std::fs::write(&path, export_hoa(&dra))?;
                println!("hoa_out {}", path.display());
            }
        }
        Command::Product {
            model,
            spec,
            stats,
            no_prune,
        } => {
            let loaded = load(&model)?;
            let mdp = build_mdp(&loaded)?;
            let dra = automaton_for(&loaded, &spec)?;
            let product = build_product(&mdp, &dra, !no_prune)?;
            println!("product_states {}", product.state_count());
            println!("pairs {}", product.pairs().len());
            if stats {
                for (i, pair) in product.pairs().iter().enumerate() {
                    println!("pair {i} fin {} inf {}", pair.fin.len(), pair.inf.len());
                }
            }
        }
        Command::Synthesize {
            model,
            spec,
            solver,
            out,
            json,
        } => {
            let loaded = load(&model)?;
            let started = Instant::now();
            let (mdp, _dra, synthesis) = run_synthesis(&loaded, &spec, &solver)?;
            let elapsed = started.elapsed();
            if json {
                let summary = serde_json::json!({
                    "max_probability": synthesis.max_probability,
                    "mdp_states": mdp.state_count(),
                    "product_states": synthesis.product.state_count(),
                    "accepting_mecs": synthesis.amecs.len(),
                    "target_states": synthesis.target.len(),
                    "dead_states": synthesis.dead.len(),
                    "vi_sweeps": synthesis.solution.sweeps,
                    "vi_residual": synthesis.solution.residual,
                    "timing_ms": elapsed.as_millis() as u64,
                });
                println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
            } else {
                println!("max_probability {:.6}", synthesis.max_probability);
            }
            if let Some(path) = out {
                std::fs::write(&path, policy_dump(&synthesis, &mdp))?;
            }
        }
        Command::Simulate {
            model,
            spec,
            solver,
            episodes,
            horizon,
            seed,
            traces_out,
            json,
        } => {
            let loaded = load(&model)?;
            let (mdp, dra, synthesis) = run_synthesis(&loaded, &spec, &solver)?;
            let estimate =
                estimate_satisfaction(&loaded, &synthesis, &mdp, &dra, episodes, horizon, seed)?;
            if let Some(dir) = &traces_out {
                std::fs::create_dir_all(dir)?;
                for k in 0..episodes {
                    let mut strategy = induce_and_project(&synthesis, &mdp, &dra);
                    let trace = simulate(&loaded, &mut strategy, seed.wrapping_add(k as u64), horizon)?;
                    let path = dir.join(format!("episode_{k:05}.txt"));
                    std::fs::write(path, trace.render(&loaded, &mdp, &synthesis))?;
                }
            }
            if json {
                let summary = serde_json::json!({
                    "fraction": estimate.fraction,
                    "half_width": estimate.half_width,
                    "episodes": estimate.episodes,
                    "horizon": estimate.horizon,
                    "entered": estimate.entered,
                    "generator": estimate.generator,
                    "max_probability": synthesis.max_probability,
                });
                println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
            } else {
                println!(
                    "fraction {:.6}\nhalf_width {:.6}\nepisodes {}\nhorizon {}\ngenerator {}",
                    estimate.fraction,
                    estimate.half_width,
                    estimate.episodes,
                    estimate.horizon,
                    GENERATOR
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            if err.use_stderr() {
                eprint!("{err}");
                return ExitCode::from(1);
            }
            // --help / --version exit cleanly.
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_resource_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
