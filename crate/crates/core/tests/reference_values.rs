//! Probabilities of the bundled models that are known independently.

use std::sync::Arc;
use std::time::Instant;

use crn_cex::transient::explore_bounded;
use crn_cex::{models, State, Target, Witness, WitnessCtmc};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn single_species_bounded_chain() {
    let t = Instant::now();
    let space = explore_bounded(&models::single_species(), Target { species: 1, value: 70 }, 70, 1000).unwrap();
    let p = space.ctmc.reach_probability(100.0).unwrap();
    println!("single species [0,70]: {p:e} in {:?}", t.elapsed());
    assert!(rel(p, 1.67e-4) < 0.02, "{p:e}");
}

#[test]
fn futile_cycle_bounded_space() {
    let t = Instant::now();
    let space =
        explore_bounded(&models::futile_cycle(), Target { species: 4, value: 40 }, 100, 100_000).unwrap();
    let p = space.ctmc.reach_probability(100.0).unwrap();
    println!("futile cycle: {} states, {p:e} in {:?}", space.states.len(), t.elapsed());
    assert!(rel(p, 0.042) < 0.05, "{p:e}");
}

#[test]
fn single_monotone_witness() {
    let crn = Arc::new(models::single_species());
    let states: Vec<State> = (40..=70).map(|x| State::from([1, x])).collect();
    let w = Witness::from_states(&crn, states).unwrap();
    let mut g = WitnessCtmc::new(crn, Target { species: 1, value: 70 });
    g.add_witness(&w);
    assert_eq!(g.cex_size(), 61);
    let p = g.to_finite_ctmc().reach_probability(100.0).unwrap();
    println!("single witness: {p:e}");
    assert!(rel(p, 7.14e-12) < 0.01, "{p:e}");
}
