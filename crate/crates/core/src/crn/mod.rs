//! Chemical reaction networks with unit stoichiometry and their discrete
//! stochastic semantics.

mod parse;

use std::fmt;

use thiserror::Error;

pub use parse::parse_crn;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrnError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown species `{name}` at line {line}")]
    UnknownSpecies { name: String, line: usize },
    #[error("non-positive rate constant {rate} at line {line}")]
    NonPositiveRate { rate: f64, line: usize },
    #[error("species `{name}` declared twice (line {line})")]
    DuplicateSpecies { name: String, line: usize },
    #[error("species index {index} out of range for a network with {count} species")]
    SpeciesOutOfRange { index: usize, count: usize },
    #[error("species `{name}` appears more than once on one side of a reaction (line {line})")]
    RepeatedSpecies { name: String, line: usize },
    #[error("state has {got} populations but the network has {expected} species")]
    StateLength { expected: usize, got: usize },
    #[error("reaction R{} is not enabled in state {state}", .reaction + 1)]
    Disabled { reaction: usize, state: State },
    #[error("population of species {species} overflows")]
    Overflow { species: usize },
    #[error("invalid property: {0}")]
    InvalidProperty(String),
}

/// A named species and its slot in the population vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Species {
    pub name: String,
    pub index: usize,
}

/// Population vector indexed by species.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(Vec<u64>);

impl State {
    pub fn new(populations: Vec<u64>) -> Self {
        State(populations)
    }

    pub fn populations(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, species: usize) -> u64 {
        self.0[species]
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.0
    }
}

impl From<Vec<u64>> for State {
    fn from(v: Vec<u64>) -> Self {
        State(v)
    }
}

impl<const N: usize> From<[u64; N]> for State {
    fn from(v: [u64; N]) -> Self {
        State(v.to_vec())
    }
}

impl std::ops::Index<usize> for State {
    type Output = u64;
    fn index(&self, species: usize) -> &u64 {
        &self.0[species]
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "]")
    }
}

/// A reaction `Ra -> Pd @ rate` where each species occurs at most once per side.
///
/// Firing decrements `Ra - Pd`, increments `Pd - Ra` and leaves `Ra ∩ Pd` alone.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    reactants: Vec<usize>,
    products: Vec<usize>,
    rate: f64,
}

impl Reaction {
    /// Builds a reaction; sides are sorted and must not repeat a species.
    pub fn new(
        mut reactants: Vec<usize>,
        mut products: Vec<usize>,
        rate: f64,
    ) -> Result<Self, CrnError> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(CrnError::NonPositiveRate { rate, line: 0 });
        }
        reactants.sort_unstable();
        products.sort_unstable();
        for side in [&reactants, &products] {
            if let Some(w) = side.windows(2).find(|w| w[0] == w[1]) {
                return Err(CrnError::RepeatedSpecies {
                    name: format!("#{}", w[0]),
                    line: 0,
                });
            }
        }
        Ok(Reaction {
            reactants,
            products,
            rate,
        })
    }

    pub fn reactants(&self) -> &[usize] {
        &self.reactants
    }

    pub fn products(&self) -> &[usize] {
        &self.products
    }

    pub fn rate_constant(&self) -> f64 {
        self.rate
    }

    pub fn is_reactant(&self, species: usize) -> bool {
        self.reactants.binary_search(&species).is_ok()
    }

    pub fn is_product(&self, species: usize) -> bool {
        self.products.binary_search(&species).is_ok()
    }

    /// Population change of `species` when this reaction fires: -1, 0 or +1.
    pub fn delta(&self, species: usize) -> i64 {
        match (self.is_reactant(species), self.is_product(species)) {
            (true, false) => -1,
            (false, true) => 1,
            _ => 0,
        }
    }

    /// Whether the species occurs on either side.
    pub fn mentions(&self, species: usize) -> bool {
        self.is_reactant(species) || self.is_product(species)
    }

    pub fn is_enabled(&self, state: &State) -> bool {
        self.reactants.iter().all(|&s| state[s] > 0)
    }

    pub fn fire(&self, index: usize, state: &State) -> Result<State, CrnError> {
        if !self.is_enabled(state) {
            return Err(CrnError::Disabled {
                reaction: index,
                state: state.clone(),
            });
        }
        let mut next = state.0.clone();
        for &s in &self.reactants {
            if !self.is_product(s) {
                next[s] -= 1;
            }
        }
        for &s in &self.products {
            if !self.is_reactant(s) {
                next[s] = next[s]
                    .checked_add(1)
                    .ok_or(CrnError::Overflow { species: s })?;
            }
        }
        Ok(State(next))
    }

    /// Mass-action propensity `rate * prod(x[s] for s in reactants)`.
    pub fn propensity(&self, index: usize, state: &State) -> Result<f64, CrnError> {
        if !self.is_enabled(state) {
            return Err(CrnError::Disabled {
                reaction: index,
                state: state.clone(),
            });
        }
        Ok(self
            .reactants
            .iter()
            .fold(self.rate, |acc, &s| acc * state[s] as f64))
    }
}

/// One enabled transition out of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Successor {
    pub reaction: usize,
    pub rate: f64,
    pub state: State,
}

/// A chemical reaction network: species, reactions and the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Crn {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
    initial: State,
}

impl Crn {
    pub fn new(
        species_names: Vec<String>,
        reactions: Vec<Reaction>,
        initial: State,
    ) -> Result<Self, CrnError> {
        let count = species_names.len();
        for (i, name) in species_names.iter().enumerate() {
            if species_names[..i].contains(name) {
                return Err(CrnError::DuplicateSpecies {
                    name: name.clone(),
                    line: 0,
                });
            }
        }
        if initial.len() != count {
            return Err(CrnError::StateLength {
                expected: count,
                got: initial.len(),
            });
        }
        for r in &reactions {
            if let Some(&index) = r
                .reactants
                .iter()
                .chain(&r.products)
                .find(|&&s| s >= count)
            {
                return Err(CrnError::SpeciesOutOfRange { index, count });
            }
        }
        let species = species_names
            .into_iter()
            .enumerate()
            .map(|(index, name)| Species { name, index })
            .collect();
        Ok(Crn {
            species,
            reactions,
            initial,
        })
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn species_count(&self) -> usize {
        self.species.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn species_name(&self, index: usize) -> &str {
        &self.species[index].name
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn reaction(&self, index: usize) -> &Reaction {
        &self.reactions[index]
    }

    pub fn initial(&self) -> &State {
        &self.initial
    }

    /// Returns a copy of the network started from a different state.
    pub fn with_initial(&self, initial: State) -> Result<Crn, CrnError> {
        self.check_state(&initial)?;
        Ok(Crn {
            initial,
            ..self.clone()
        })
    }

    pub fn check_state(&self, state: &State) -> Result<(), CrnError> {
        if state.len() != self.species.len() {
            return Err(CrnError::StateLength {
                expected: self.species.len(),
                got: state.len(),
            });
        }
        Ok(())
    }

    pub fn enabled(&self, state: &State, reaction: usize) -> bool {
        self.reactions[reaction].is_enabled(state)
    }

    pub fn fire(&self, state: &State, reaction: usize) -> Result<State, CrnError> {
        self.reactions[reaction].fire(reaction, state)
    }

    pub fn propensity(&self, state: &State, reaction: usize) -> Result<f64, CrnError> {
        self.reactions[reaction].propensity(reaction, state)
    }

    /// Every enabled reaction with its rate and resulting state, in declaration order.
    pub fn successors(&self, state: &State) -> Vec<Successor> {
        self.reactions
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_enabled(state))
            .filter_map(|(i, r)| {
                // Overflowing successors are dropped; populations are far below u64::MAX in practice.
                let next = r.fire(i, state).ok()?;
                let rate = r.propensity(i, state).ok()?;
                Some(Successor {
                    reaction: i,
                    rate,
                    state: next,
                })
            })
            .collect()
    }

    /// Sum of propensities of the enabled reactions that change the state.
    pub fn exit_rate(&self, state: &State) -> f64 {
        self.successors(state)
            .iter()
            .filter(|s| &s.state != state)
            .map(|s| s.rate)
            .sum()
    }

    /// The lowest-indexed reaction that takes `from` to `to`, if any.
    pub fn explain_step(&self, from: &State, to: &State) -> Option<usize> {
        self.reactions
            .iter()
            .enumerate()
            .find(|(i, r)| r.is_enabled(from) && r.fire(*i, from).ok().as_ref() == Some(to))
            .map(|(i, _)| i)
    }

    /// Every reaction that takes `from` to `to`.
    pub fn reactions_between(&self, from: &State, to: &State) -> Vec<usize> {
        self.reactions
            .iter()
            .enumerate()
            .filter(|(i, r)| r.is_enabled(from) && r.fire(*i, from).ok().as_ref() == Some(to))
            .map(|(i, _)| i)
            .collect()
    }

    fn write_side(&self, f: &mut fmt::Formatter<'_>, side: &[usize]) -> fmt::Result {
        for (i, &s) in side.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", self.species[s].name)?;
        }
        Ok(())
    }

    pub fn format_reaction(&self, index: usize) -> String {
        struct One<'a>(&'a Crn, usize);
        impl fmt::Display for One<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt_reaction(f, self.1)
            }
        }
        One(self, index).to_string()
    }

    fn fmt_reaction(&self, f: &mut fmt::Formatter<'_>, index: usize) -> fmt::Result {
        let r = &self.reactions[index];
        self.write_side(f, &r.reactants)?;
        if r.reactants.is_empty() {
            write!(f, "->")?;
        } else {
            write!(f, " ->")?;
        }
        if !r.products.is_empty() {
            write!(f, " ")?;
            self.write_side(f, &r.products)?;
        }
        write!(f, " @ {:?}", r.rate)
    }
}

/// Pretty-prints in the model-file format; `parse_crn` reads it back unchanged.
impl fmt::Display for Crn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.species {
            writeln!(f, "species {}={}", s.name, self.initial[s.index])?;
        }
        for i in 0..self.reactions.len() {
            self.fmt_reaction(f, i)?;
            writeln!(f)?;
        }
        Ok(())
    }
}

/// The target predicate `S = theta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Target {
    pub species: usize,
    pub value: u64,
}

impl Target {
    pub fn holds(&self, state: &State) -> bool {
        state[self.species] == self.value
    }
}

/// `P<=threshold [ true U<=time_bound target ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Property {
    pub target: Target,
    pub time_bound: f64,
    pub threshold: f64,
}

impl Property {
    pub fn new(target: Target, time_bound: f64, threshold: f64) -> Result<Self, CrnError> {
        if !(time_bound > 0.0 && time_bound.is_finite()) {
            return Err(CrnError::InvalidProperty(format!(
                "time bound must be positive, got {time_bound}"
            )));
        }
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(CrnError::InvalidProperty(format!(
                "probability threshold must lie in (0, 1], got {threshold}"
            )));
        }
        Ok(Property {
            target,
            time_bound,
            threshold,
        })
    }

    /// Parses a `<species>=<value>` target against a network.
    pub fn parse_target(crn: &Crn, text: &str) -> Result<Target, CrnError> {
        let (name, value) = text
            .split_once('=')
            .ok_or_else(|| CrnError::InvalidProperty(format!("expected <species>=<int>, got `{text}`")))?;
        let species = crn
            .species_index(name.trim())
            .ok_or_else(|| CrnError::UnknownSpecies {
                name: name.trim().to_string(),
                line: 0,
            })?;
        let value = value
            .trim()
            .parse::<u64>()
            .map_err(|e| CrnError::InvalidProperty(format!("target value `{}`: {e}", value.trim())))?;
        Ok(Target { species, value })
    }
}
