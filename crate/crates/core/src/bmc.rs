//! Bounded-model-checking encodings over symbolic per-step populations.
//!
//! Variable `v{step}_{species}` holds the population of `species` after
//! `step` reaction firings. A bound `k` unrolls `k` transitions, i.e. `k + 1`
//! state vectors.

use std::collections::BTreeSet;
use std::fmt;

use crate::crn::{Crn, State, Target};
use crate::witness::Witness;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub step: usize,
    pub species: usize,
}

impl Var {
    pub fn new(step: usize, species: usize) -> Self {
        Var { step, species }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}_{}", self.step, self.species)
    }
}

/// Linear integer atoms used by the encodings.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Atom {
    /// `var = value`
    Equals(Var, i64),
    /// `var > 0`
    Positive(Var),
    /// `var >= 0`
    NonNegative(Var),
    /// `lhs = rhs + delta`
    Offset { lhs: Var, rhs: Var, delta: i64 },
}

impl Atom {
    pub fn eval(&self, value: &impl Fn(Var) -> i64) -> bool {
        match *self {
            Atom::Equals(v, c) => value(v) == c,
            Atom::Positive(v) => value(v) > 0,
            Atom::NonNegative(v) => value(v) >= 0,
            Atom::Offset { lhs, rhs, delta } => value(lhs) == value(rhs) + delta,
        }
    }

    fn vars(&self, out: &mut BTreeSet<Var>) {
        match *self {
            Atom::Equals(v, _) | Atom::Positive(v) | Atom::NonNegative(v) => {
                out.insert(v);
            }
            Atom::Offset { lhs, rhs, .. } => {
                out.insert(lhs);
                out.insert(rhs);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    /// Conjunction; `True` when empty, the sole member when singleton.
    pub fn and(mut parts: Vec<Formula>) -> Formula {
        parts.retain(|p| *p != Formula::True);
        if parts.contains(&Formula::False) {
            return Formula::False;
        }
        match parts.len() {
            0 => Formula::True,
            1 => parts.pop().unwrap(),
            _ => Formula::And(parts),
        }
    }

    /// Disjunction; `False` when empty, the sole member when singleton.
    pub fn or(mut parts: Vec<Formula>) -> Formula {
        parts.retain(|p| *p != Formula::False);
        if parts.contains(&Formula::True) {
            return Formula::True;
        }
        match parts.len() {
            0 => Formula::False,
            1 => parts.pop().unwrap(),
            _ => Formula::Or(parts),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Formula) -> Formula {
        match inner {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(f) => *f,
            f => Formula::Not(Box::new(f)),
        }
    }

    pub fn atom(a: Atom) -> Formula {
        Formula::Atom(a)
    }

    pub fn eval(&self, value: &impl Fn(Var) -> i64) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => a.eval(value),
            Formula::Not(f) => !f.eval(value),
            Formula::And(fs) => fs.iter().all(|f| f.eval(value)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(value)),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => a.vars(out),
            Formula::Not(f) => f.collect_vars(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_vars(out)),
        }
    }
}

/// Evaluates a formula against a concrete trace (`trace[step][species]`).
pub fn eval_on_trace(formula: &Formula, trace: &[State]) -> bool {
    formula.eval(&|v: Var| trace[v.step][v.species] as i64)
}

/// A network unrolled to a fixed number of transitions.
#[derive(Debug, Clone, Copy)]
pub struct UnrollContext<'a> {
    crn: &'a Crn,
    bound: usize,
}

impl<'a> UnrollContext<'a> {
    pub fn new(crn: &'a Crn, bound: usize) -> Self {
        UnrollContext { crn, bound }
    }

    pub fn crn(&self) -> &'a Crn {
        self.crn
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn var(&self, step: usize, species: usize) -> Var {
        debug_assert!(step <= self.bound && species < self.crn.species_count());
        Var::new(step, species)
    }

    /// All `(bound + 1) * N` state variables, step-major.
    pub fn state_vars(&self) -> Vec<Var> {
        (0..=self.bound)
            .flat_map(|step| (0..self.crn.species_count()).map(move |s| Var::new(step, s)))
            .collect()
    }
}

/// `v{step}_i = state[i]` for every species.
pub fn state_at(step: usize, state: &State) -> Formula {
    Formula::and(
        state
            .populations()
            .iter()
            .enumerate()
            .map(|(i, &x)| Formula::atom(Atom::Equals(Var::new(step, i), x as i64)))
            .collect(),
    )
}

/// Fixes the step-0 variables to `state`.
pub fn encode_initial(_ctx: &UnrollContext<'_>, state: &State) -> Formula {
    state_at(0, state)
}

/// The transition relation between step `step - 1` and `step`: one disjunct per
/// reaction with its enabledness guard, the three update clauses and the frame
/// condition for untouched species.
pub fn encode_step(ctx: &UnrollContext<'_>, step: usize) -> Formula {
    assert!(step >= 1, "transitions start at step 1");
    let crn = ctx.crn();
    let disjuncts = crn
        .reactions()
        .iter()
        .map(|r| {
            let mut parts = Vec::new();
            for &s in r.reactants() {
                parts.push(Formula::atom(Atom::Positive(Var::new(step - 1, s))));
            }
            for s in 0..crn.species_count() {
                parts.push(Formula::atom(Atom::Offset {
                    lhs: Var::new(step, s),
                    rhs: Var::new(step - 1, s),
                    delta: r.delta(s),
                }));
            }
            Formula::and(parts)
        })
        .collect();
    Formula::or(disjuncts)
}

/// `v{step}_i >= 0` for every species and step.
pub fn encode_non_negative(ctx: &UnrollContext<'_>) -> Formula {
    Formula::and(
        ctx.state_vars()
            .into_iter()
            .map(|v| Formula::atom(Atom::NonNegative(v)))
            .collect(),
    )
}

fn states_differ(ctx: &UnrollContext<'_>, a: usize, b: usize) -> Formula {
    Formula::or(
        (0..ctx.crn().species_count())
            .map(|s| {
                Formula::not(Formula::atom(Atom::Offset {
                    lhs: Var::new(a, s),
                    rhs: Var::new(b, s),
                    delta: 0,
                }))
            })
            .collect(),
    )
}

/// Negated loop constraint: all `bound + 1` state vectors pairwise distinct.
pub fn encode_loop_free(ctx: &UnrollContext<'_>) -> Formula {
    let mut parts = Vec::new();
    for h in 1..=ctx.bound() {
        for j in 0..h {
            parts.push(states_differ(ctx, h, j));
        }
    }
    Formula::and(parts)
}

/// `v{bound}_S = theta`.
pub fn encode_target(ctx: &UnrollContext<'_>, target: Target) -> Formula {
    Formula::atom(Atom::Equals(
        ctx.var(ctx.bound(), target.species),
        target.value as i64,
    ))
}

/// Loop-free traces of exactly `bound` transitions from the network's initial
/// state to a target state.
pub fn encode_bmc(crn: &Crn, target: Target, bound: usize) -> Formula {
    encode_bmc_from(crn, crn.initial(), target, bound)
}

/// As [`encode_bmc`], starting from an arbitrary state.
pub fn encode_bmc_from(crn: &Crn, start: &State, target: Target, bound: usize) -> Formula {
    let ctx = UnrollContext::new(crn, bound);
    let mut parts = vec![encode_initial(&ctx, start)];
    parts.extend((1..=bound).map(|i| encode_step(&ctx, i)));
    parts.push(encode_non_negative(&ctx));
    parts.push(encode_loop_free(&ctx));
    parts.push(encode_target(&ctx, target));
    Formula::and(parts)
}

/// Blocks the exact state sequence of `witness`.
pub fn encode_exclusion(witness: &Witness) -> Formula {
    Formula::not(Formula::and(
        witness
            .states()
            .iter()
            .enumerate()
            .map(|(step, state)| state_at(step, state))
            .collect(),
    ))
}

/// Inputs of a scaffold query: fragments of exactly `length` transitions that
/// leave one of `sources`, end in one of `landing` or in a target state, and
/// traverse at least one state pair not in `known_edges`.
#[derive(Debug, Clone, Copy)]
pub struct ScaffoldQuery<'a> {
    pub sources: &'a [State],
    pub landing: &'a [State],
    pub target: Target,
    pub length: usize,
    pub known_edges: &'a [(State, State)],
}

/// Scaffold formula. Intermediate states may not satisfy the target (moves out of
/// an absorbing target carry no probability).
pub fn encode_scaffold(crn: &Crn, query: &ScaffoldQuery<'_>) -> Formula {
    assert!(query.length >= 1, "scaffold fragments have at least one transition");
    let j = query.length;
    let ctx = UnrollContext::new(crn, j);
    let mut parts = vec![Formula::or(
        query.sources.iter().map(|s| state_at(0, s)).collect(),
    )];
    parts.extend((1..=j).map(|i| encode_step(&ctx, i)));
    parts.push(encode_non_negative(&ctx));
    let mut landing: Vec<Formula> = query.landing.iter().map(|s| state_at(j, s)).collect();
    landing.push(encode_target(&ctx, query.target));
    parts.push(Formula::or(landing));
    for step in 0..j {
        parts.push(Formula::not(Formula::atom(Atom::Equals(
            Var::new(step, query.target.species),
            query.target.value as i64,
        ))));
    }
    parts.push(encode_fresh_edge(j, query.known_edges));
    Formula::and(parts)
}

/// Some step `i -> i+1` of a `length`-transition trace is not a known edge.
pub fn encode_fresh_edge(length: usize, known_edges: &[(State, State)]) -> Formula {
    Formula::or(
        (0..length)
            .map(|i| {
                Formula::and(
                    known_edges
                        .iter()
                        .map(|(a, b)| {
                            Formula::not(Formula::and(vec![state_at(i, a), state_at(i + 1, b)]))
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn s(v: &[u64]) -> State {
        State::new(v.to_vec())
    }

    fn eq(step: usize, sp: usize, c: i64) -> Formula {
        Formula::atom(Atom::Equals(Var::new(step, sp), c))
    }

    #[test]
    fn initial_encoding() {
        let crn = models::single_species();
        let ctx = UnrollContext::new(&crn, 2);
        assert_eq!(
            encode_initial(&ctx, crn.initial()),
            Formula::And(vec![eq(0, 0, 1), eq(0, 1, 40)])
        );
        assert_eq!(encode_initial(&ctx, &s(&[0])), eq(0, 0, 0));
        let f = models::futile_cycle();
        let ctx = UnrollContext::new(&f, 0);
        let enc = encode_initial(&ctx, f.initial());
        assert!(eval_on_trace(&enc, &[s(&[1, 50, 0, 1, 50, 0])]));
        assert!(!eval_on_trace(&enc, &[s(&[1, 50, 0, 1, 49, 0])]));
    }

    #[test]
    fn step_encoding_single_species() {
        let crn = models::single_species();
        let ctx = UnrollContext::new(&crn, 1);
        let off = |lhs, rhs, delta| Formula::atom(Atom::Offset { lhs, rhs, delta });
        let expected = Formula::Or(vec![
            Formula::And(vec![
                Formula::atom(Atom::Positive(Var::new(0, 0))),
                off(Var::new(1, 0), Var::new(0, 0), 0),
                off(Var::new(1, 1), Var::new(0, 1), 1),
            ]),
            Formula::And(vec![
                Formula::atom(Atom::Positive(Var::new(0, 1))),
                off(Var::new(1, 0), Var::new(0, 0), 0),
                off(Var::new(1, 1), Var::new(0, 1), -1),
            ]),
        ]);
        assert_eq!(encode_step(&ctx, 1), expected);
    }

    #[test]
    fn step_without_reactions_is_false() {
        let crn = crate::crn::parse_crn("species A=0").unwrap();
        assert_eq!(encode_step(&UnrollContext::new(&crn, 1), 1), Formula::False);
    }

    #[test]
    fn step_assignments_match_successors() {
        // Every assignment of a 2-species model with populations <= 3 satisfies the
        // one-step relation exactly when it is a successor pair.
        let crn = crate::crn::parse_crn(
            "species A=1\nspecies B=1\nA -> B @ 1\nA + B -> A @ 2\n-> A @ 0.5\nB -> @ 1\nA + B -> A + B @ 1",
        )
        .unwrap();
        let ctx = UnrollContext::new(&crn, 1);
        let enc = Formula::and(vec![encode_step(&ctx, 1), encode_non_negative(&ctx)]);
        for a in 0..=3u64 {
            for b in 0..=3u64 {
                let from = s(&[a, b]);
                let succ: Vec<State> = crn.successors(&from).into_iter().map(|x| x.state).collect();
                for c in 0..=4u64 {
                    for d in 0..=4u64 {
                        let to = s(&[c, d]);
                        assert_eq!(
                            eval_on_trace(&enc, &[from.clone(), to.clone()]),
                            succ.contains(&to),
                            "{from} -> {to}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn loop_free() {
        let crn = models::single_species();
        assert_eq!(encode_loop_free(&UnrollContext::new(&crn, 0)), Formula::True);
        let enc = encode_loop_free(&UnrollContext::new(&crn, 2));
        assert!(!eval_on_trace(&enc, &[s(&[1, 40]), s(&[1, 41]), s(&[1, 40])]));
        assert!(eval_on_trace(&enc, &[s(&[1, 40]), s(&[1, 41]), s(&[1, 42])]));
    }

    #[test]
    fn target_encoding() {
        let crn = models::single_species();
        let t = Target { species: 1, value: 42 };
        assert_eq!(encode_target(&UnrollContext::new(&crn, 2), t), eq(2, 1, 42));
        let t0 = Target { species: 0, value: 0 };
        assert_eq!(encode_target(&UnrollContext::new(&crn, 5), t0), eq(5, 0, 0));
        let y = models::yeast();
        let gbg = Target { species: y.species_index("Gbg").unwrap(), value: 50 };
        assert_eq!(encode_target(&UnrollContext::new(&y, 7), gbg), eq(7, 5, 50));
    }

    #[test]
    fn bmc_on_concrete_traces() {
        let crn = models::single_species();
        let t = Target { species: 1, value: 42 };
        let f = encode_bmc(&crn, t, 2);
        assert!(eval_on_trace(&f, &[s(&[1, 40]), s(&[1, 41]), s(&[1, 42])]));
        assert!(!eval_on_trace(&f, &[s(&[1, 40]), s(&[1, 41]), s(&[1, 41])]));
        assert!(!eval_on_trace(&f, &[s(&[1, 40]), s(&[1, 42]), s(&[1, 42])]));
        let f0 = encode_bmc(&crn, t, 0);
        assert!(!eval_on_trace(&f0, &[s(&[1, 40])]));
    }

    #[test]
    fn exclusion_blocks_only_that_trace() {
        let crn = models::single_species();
        let w = Witness::from_states(&crn, vec![s(&[1, 40]), s(&[1, 41]), s(&[1, 42])]).unwrap();
        let ex = encode_exclusion(&w);
        assert!(!eval_on_trace(&ex, w.states()));
        assert!(eval_on_trace(&ex, &[s(&[1, 40]), s(&[1, 39]), s(&[1, 40])]));
        assert_eq!(ex.vars().len(), 6);
    }

    #[test]
    fn scaffold_on_concrete_fragments() {
        let crn = models::single_species();
        let t = Target { species: 1, value: 42 };
        let recorded = vec![s(&[1, 40]), s(&[1, 41]), s(&[1, 42])];
        let sources = vec![s(&[1, 40]), s(&[1, 41])];
        let edges = vec![(s(&[1, 40]), s(&[1, 41])), (s(&[1, 41]), s(&[1, 42]))];
        let q = ScaffoldQuery {
            sources: &sources,
            landing: &recorded,
            target: t,
            length: 2,
            known_edges: &edges,
        };
        let f = encode_scaffold(&crn, &q);
        assert!(eval_on_trace(&f, &[s(&[1, 40]), s(&[1, 39]), s(&[1, 40])]));
        // Only known edges: rejected.
        assert!(!eval_on_trace(&f, &[s(&[1, 40]), s(&[1, 41]), s(&[1, 42])]));
        // Passing through the target before the end: rejected.
        assert!(!eval_on_trace(&f, &[s(&[1, 41]), s(&[1, 42]), s(&[1, 41])]));
        // Landing outside the recorded set: rejected.
        assert!(!eval_on_trace(&f, &[s(&[1, 40]), s(&[1, 39]), s(&[1, 38])]));
    }
}
