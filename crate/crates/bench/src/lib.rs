//! Fixtures shared by the benchmarks.

use crn_cex::models;
use crn_cex::transient::explore::{explore_bounded, BoundedSpace};
use crn_cex::{FiniteCtmc, Target};

/// Birth-death chain `0 <-> 1 <-> ... <-> n` with the last state as target.
pub fn birth_death(n: usize, up: f64, down: f64) -> FiniteCtmc {
    let mut transitions = Vec::with_capacity(2 * n);
    for i in 0..n {
        transitions.push((i, i + 1, up));
        if i > 0 {
            transitions.push((i, i - 1, down * i as f64));
        }
    }
    let mut targets = vec![false; n + 1];
    targets[n] = true;
    FiniteCtmc::new(n + 1, &transitions, 0, targets).expect("valid chain")
}

/// The single-species network capped at 70 molecules.
pub fn single_species_space() -> BoundedSpace {
    explore_bounded(&models::single_species(), Target { species: 1, value: 70 }, 70, 10_000)
        .expect("small space")
}

/// The futile cycle capped at 100 molecules per species.
pub fn futile_cycle_space() -> BoundedSpace {
    explore_bounded(&models::futile_cycle(), Target { species: 4, value: 40 }, 100, 100_000)
        .expect("small space")
}
