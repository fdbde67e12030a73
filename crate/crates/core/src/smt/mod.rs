//! SMT-LIB 2 serialization, the solver process session and model decoding.

mod emit;
mod session;
pub mod sexpr;

use std::collections::BTreeMap;
use std::time::Duration;

use thiserror::Error;

pub use emit::{declare, emit_script, emit_smtlib, to_term};
pub use session::{parse_model, CheckResult, SatAnswer, SolverSession};

use crate::bmc::{UnrollContext, Var};
use crate::crn::State;
use crate::witness::Witness;

/// Environment variable holding a solver command line.
pub const SOLVER_ENV: &str = "CRN_CEX_SOLVER";

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("cannot start solver `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("solver exited unexpectedly; stderr: {stderr}")]
    Crashed { stderr: String },
    #[error("solver timed out after {seconds} s; stderr: {stderr}")]
    Timeout { seconds: f64, stderr: String },
    #[error("solver answered unknown: {reason}")]
    Unknown { reason: String },
    #[error("solver error: {message}")]
    Solver { message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("cannot decode model: {0}")]
    Decode(String),
    #[error("model does not decode to a valid trace: {0}")]
    Unsound(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    /// Program followed by its arguments.
    pub command: Vec<String>,
    /// Limit for every single solver answer.
    pub timeout: Duration,
}

impl SolverConfig {
    /// Splits a command line such as `"z3 -in"` on whitespace.
    pub fn from_command_line(line: &str) -> Self {
        SolverConfig {
            command: line.split_whitespace().map(str::to_string).collect(),
            ..SolverConfig::default()
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            command: vec!["z3".into(), "-in".into()],
            timeout: Duration::from_secs(300),
        }
    }
}

/// A satisfying assignment, by variable name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolverModel {
    values: BTreeMap<String, i64>,
}

impl SolverModel {
    pub fn insert(&mut self, name: &str, value: i64) {
        self.values.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<i64> {
        self.values.get(name).copied()
    }

    pub fn value(&self, v: Var) -> Option<i64> {
        self.get(&v.to_string())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i64)> {
        self.values.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

/// The state sequence `v0 .. v{bound}` of `model`, validated step by step.
pub fn extract_witness(model: &SolverModel, ctx: &UnrollContext<'_>) -> Result<Witness, SmtError> {
    let crn = ctx.crn();
    let mut states = Vec::with_capacity(ctx.bound() + 1);
    for step in 0..=ctx.bound() {
        let mut pops = Vec::with_capacity(crn.species_count());
        for species in 0..crn.species_count() {
            let v = ctx.var(step, species);
            let x = model
                .value(v)
                .ok_or_else(|| SmtError::Decode(format!("model has no value for {v}")))?;
            let x = u64::try_from(x)
                .map_err(|_| SmtError::Unsound(format!("{v} = {x} is negative")))?;
            pops.push(x);
        }
        states.push(State::new(pops));
    }
    Witness::from_states(crn, states).map_err(|e| SmtError::Unsound(e.to_string()))
}
