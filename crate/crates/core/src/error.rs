//! Error type shared by every stage of the pipeline.

use thiserror::Error;

/// Errors produced while loading models, translating formulas, building
/// automata and MDPs, solving, or simulating.
#[derive(Debug, Error)]
pub enum Error {
    /// Structural error in an input document (JSON schema, HOA syntax).
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// Lexical or grammatical error in a formula string.
    #[error("formula syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    /// A model invariant does not hold (row sums, undeclared names, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A configured size cap was exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// The fixpoint solver did not converge within its iteration budget.
    #[error("solver did not converge: residual {residual:e} after {iterations} iterations")]
    Solver { residual: f64, iterations: u64 },

    /// An argument is outside the domain of the operation.
    #[error("input error: {0}")]
    Input(String),

    /// The input uses a feature outside the supported subset.
    #[error("unsupported feature: {0}")]
    Unsupported(String),

    /// An observation fed to a running strategy does not belong to the model.
    #[error("observation error: {0}")]
    Observation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code class: capacity and solver failures are distinguished from
    /// ordinary validation/input problems by the command-line front end.
    pub fn is_resource_error(&self) -> bool {
        matches!(self, Error::Capacity(_) | Error::Solver { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
