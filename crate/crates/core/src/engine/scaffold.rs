use std::collections::BTreeSet;

use log::debug;

use super::EngineError;
use crate::bmc::{encode_scaffold, ScaffoldQuery, UnrollContext};
use crate::crn::State;
use crate::smt::{extract_witness, CheckResult, SolverSession};
use crate::witness::{Witness, WitnessCtmc};

/// One scaffold round on `graph`.
///
/// Sources (the non-target states) and landing states are those recorded
/// when the round starts; fragments found during the round are added to the
/// graph immediately, so later queries only ask for edges not yet present.
/// Lengths `1..=j_max` are scanned in order until `count` fragments are found.
pub fn scaffold_round(
    session: &mut SolverSession,
    graph: &mut WitnessCtmc,
    j_max: usize,
    count: usize,
) -> Result<Vec<Witness>, EngineError> {
    let target = graph.target();
    let landing: Vec<State> = graph.states().to_vec();
    let sources: Vec<State> = landing.iter().filter(|s| !target.holds(s)).cloned().collect();
    let mut fragments = Vec::new();
    if sources.is_empty() {
        return Ok(fragments);
    }
    let crn = graph.crn().clone();
    'lengths: for j in 1..=j_max {
        let ctx = UnrollContext::new(&crn, j);
        let vars: BTreeSet<_> = ctx.state_vars().into_iter().collect();
        while fragments.len() < count {
            let known = graph.edge_states();
            let formula = encode_scaffold(
                &crn,
                &ScaffoldQuery {
                    sources: &sources,
                    landing: &landing,
                    target,
                    length: j,
                    known_edges: &known,
                },
            );
            match session.check_formula(&formula)? {
                CheckResult::Unsat => continue 'lengths,
                CheckResult::Sat(model) => {
                    debug_assert!(vars.iter().all(|v| model.value(*v).is_some()));
                    let fragment = extract_witness(&model, &ctx)?;
                    let added = graph.add_path(&fragment);
                    if added == 0 {
                        return Err(EngineError::Internal(format!(
                            "scaffold fragment {fragment} adds nothing"
                        )));
                    }
                    debug!("scaffold j={j}: {fragment}");
                    fragments.push(fragment);
                }
            }
        }
        break;
    }
    Ok(fragments)
}
