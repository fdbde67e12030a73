//! Counterexample generation for chemical reaction networks.
//!
//! A CRN is interpreted as a (possibly infinite) continuous-time Markov chain.
//! Given a time-bounded reachability property `P<=p [ true U<=T S=theta ]`,
//! the engine searches for witness traces with SMT-based bounded model
//! checking, overlays them into a finite witness CTMC completed with a sink
//! state, and evaluates that CTMC with a built-in uniformization engine until
//! its probability exceeds `p`.
//!
//! Module map:
//!
//! * [`crn`] - model types, the text format and the firing semantics.
//! * [`bmc`] - constraint formulas over per-step population variables.
//! * [`smt`] - SMT-LIB 2 serialization and the external solver session.
//! * [`witness`] - witness traces and the witness CTMC with its exports.
//! * [`transient`] - time-bounded reachability on finite CTMCs.
//! * [`engine`] - the counterexample loop with divide-and-conquer and scaffolding.
//! * [`oracle`] - brute-force references (path enumeration, dense matrix exponential).
//! * [`models`] - the bundled benchmark networks.

pub mod bmc;
pub mod crn;
pub mod engine;
pub mod models;
pub mod oracle;
pub mod smt;
pub mod transient;
pub mod witness;

mod fmt;

pub use bmc::{Formula, UnrollContext, Var};
pub use crn::{Crn, CrnError, Property, Reaction, Species, State, Target};
pub use engine::{CexOutcome, CexResult, EngineConfig, EngineError};
pub use fmt::format_sig;
pub use smt::{SmtError, SolverConfig, SolverModel, SolverSession};
pub use transient::{FiniteCtmc, TransientError, TransientOptions};
pub use witness::{Witness, WitnessCtmc};
