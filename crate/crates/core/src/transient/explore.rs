//! Exhaustive construction of a population-capped state space.

use std::collections::{HashMap, VecDeque};

use super::{FiniteCtmc, TransientError};
use crate::crn::{Crn, State, Target};

/// Reachable states of a CRN with every population kept in `[0, cap]`.
#[derive(Debug, Clone)]
pub struct BoundedSpace {
    pub states: Vec<State>,
    pub ctmc: FiniteCtmc,
}

/// Breadth-first exploration from the initial state. Firings that would push a
/// population above `cap` are disabled, and target states are not expanded.
pub fn explore_bounded(
    crn: &Crn,
    target: Target,
    cap: u64,
    max_states: usize,
) -> Result<BoundedSpace, TransientError> {
    let mut index: HashMap<State, usize> = HashMap::new();
    let mut states = vec![crn.initial().clone()];
    index.insert(crn.initial().clone(), 0);
    let mut transitions = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        let state = states[id].clone();
        if target.holds(&state) {
            continue;
        }
        for succ in crn.successors(&state) {
            if succ.state == state || succ.state.populations().iter().any(|&x| x > cap) {
                continue;
            }
            let dst = match index.get(&succ.state) {
                Some(&d) => d,
                None => {
                    let d = states.len();
                    if d >= max_states {
                        return Err(TransientError::TooLarge {
                            states: d + 1,
                            limit: max_states,
                        });
                    }
                    states.push(succ.state.clone());
                    index.insert(succ.state, d);
                    queue.push_back(d);
                    d
                }
            };
            transitions.push((id, dst, succ.rate));
        }
    }
    let targets = states.iter().map(|s| target.holds(s)).collect();
    let ctmc = FiniteCtmc::new(states.len(), &transitions, 0, targets)?;
    Ok(BoundedSpace { states, ctmc })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn single_species_chain() {
        let crn = models::single_species();
        let space = explore_bounded(&crn, Target { species: 1, value: 70 }, 70, 1000).unwrap();
        // S1 stays 1, S2 covers 0..=70.
        assert_eq!(space.states.len(), 71);
        assert_eq!(space.ctmc.targets().iter().filter(|&&t| t).count(), 1);
    }

    #[test]
    fn futile_cycle_is_small() {
        let crn = models::futile_cycle();
        let space = explore_bounded(&crn, Target { species: 4, value: 40 }, 100, 100_000).unwrap();
        assert!(space.states.len() < 1000, "{}", space.states.len());
    }

    #[test]
    fn limit() {
        let crn = models::single_species();
        assert!(matches!(
            explore_bounded(&crn, Target { species: 1, value: 70 }, 70, 10),
            Err(TransientError::TooLarge { .. })
        ));
    }
}
