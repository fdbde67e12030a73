//! Witness traces and the witness CTMC built by overlaying them.

mod export;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::crn::{Crn, State, Target};
use crate::transient::FiniteCtmc;

pub use export::{finite_ctmc_from_json, ExportEdge, ExportNode, ExportedCtmc, ImportError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WitnessError {
    #[error("a trace needs at least one state")]
    Empty,
    #[error("no reaction takes {from} to {to} (step {step})")]
    UnexplainedStep { step: usize, from: State, to: State },
    #[error("reaction R{} does not take {from} to {to} (step {step})", .reaction + 1)]
    WrongReaction {
        step: usize,
        reaction: usize,
        from: State,
        to: State,
    },
    #[error("trace has {states} states but {reactions} reactions")]
    Shape { states: usize, reactions: usize },
    #[error("cannot join traces: {left} != {right}")]
    Disconnected { left: State, right: State },
}

/// An alternating sequence `x0 -R-> x1 -R-> ... xk`.
///
/// Full witnesses start at the network's initial state and end in a target
/// state; scaffold fragments use the same type with other endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Witness {
    states: Vec<State>,
    reactions: Vec<usize>,
}

impl Witness {
    /// Validates every step; each reaction must be enabled and produce the next state.
    pub fn new(crn: &Crn, states: Vec<State>, reactions: Vec<usize>) -> Result<Self, WitnessError> {
        if states.is_empty() {
            return Err(WitnessError::Empty);
        }
        if reactions.len() + 1 != states.len() {
            return Err(WitnessError::Shape {
                states: states.len(),
                reactions: reactions.len(),
            });
        }
        for (step, (pair, &r)) in states.windows(2).zip(&reactions).enumerate() {
            let ok = r < crn.reactions().len()
                && crn.enabled(&pair[0], r)
                && crn.fire(&pair[0], r).ok().as_ref() == Some(&pair[1]);
            if !ok {
                return Err(WitnessError::WrongReaction {
                    step,
                    reaction: r,
                    from: pair[0].clone(),
                    to: pair[1].clone(),
                });
            }
        }
        Ok(Witness { states, reactions })
    }

    /// Recovers the reaction of each step (lowest index on ties).
    pub fn from_states(crn: &Crn, states: Vec<State>) -> Result<Self, WitnessError> {
        if states.is_empty() {
            return Err(WitnessError::Empty);
        }
        let reactions = states
            .windows(2)
            .enumerate()
            .map(|(step, pair)| {
                crn.explain_step(&pair[0], &pair[1])
                    .ok_or_else(|| WitnessError::UnexplainedStep {
                        step,
                        from: pair[0].clone(),
                        to: pair[1].clone(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Witness { states, reactions })
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn reactions(&self) -> &[usize] {
        &self.reactions
    }

    /// Number of transitions.
    pub fn len(&self) -> usize {
        self.reactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reactions.is_empty()
    }

    pub fn first(&self) -> &State {
        &self.states[0]
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("non-empty")
    }

    /// Whether no state occurs twice.
    pub fn is_loop_free(&self) -> bool {
        let set: BTreeSet<&State> = self.states.iter().collect();
        set.len() == self.states.len()
    }

    /// Appends `next`, which must start where `self` ends.
    pub fn concat(mut self, next: &Witness) -> Result<Witness, WitnessError> {
        if self.last() != next.first() {
            return Err(WitnessError::Disconnected {
                left: self.last().clone(),
                right: next.first().clone(),
            });
        }
        self.states.extend_from_slice(&next.states[1..]);
        self.reactions.extend_from_slice(&next.reactions);
        Ok(self)
    }
}

impl std::fmt::Display for Witness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.states[0])?;
        for (r, s) in self.reactions.iter().zip(&self.states[1..]) {
            write!(f, " -R{}-> {}", r + 1, s)?;
        }
        Ok(())
    }
}

/// A transition of the witness CTMC: the summed propensity of every reaction
/// that moves between the two states.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub rate: f64,
    pub reactions: Vec<usize>,
}

pub type NodeId = usize;

/// Merged witnesses with propensity rates and one absorbing sink.
///
/// Invariant: for every node the real outgoing rates plus the sink rate equal
/// the total propensity of the reactions enabled in that node's state.
#[derive(Debug, Clone)]
pub struct WitnessCtmc {
    crn: Arc<Crn>,
    target: Target,
    states: Vec<State>,
    index: HashMap<State, NodeId>,
    edges: BTreeMap<(NodeId, NodeId), Edge>,
    out: Vec<Vec<NodeId>>,
    sink: Vec<Edge>,
    witnesses: usize,
}

impl WitnessCtmc {
    /// A graph holding only the initial state.
    pub fn new(crn: Arc<Crn>, target: Target) -> Self {
        let mut g = WitnessCtmc {
            crn,
            target,
            states: Vec::new(),
            index: HashMap::new(),
            edges: BTreeMap::new(),
            out: Vec::new(),
            sink: Vec::new(),
            witnesses: 0,
        };
        let init = g.crn.initial().clone();
        g.intern(&init);
        g
    }

    pub fn crn(&self) -> &Crn {
        &self.crn
    }

    pub fn target(&self) -> Target {
        self.target
    }

    fn intern(&mut self, state: &State) -> (NodeId, bool) {
        if let Some(&id) = self.index.get(state) {
            return (id, false);
        }
        let id = self.states.len();
        self.states.push(state.clone());
        self.index.insert(state.clone(), id);
        self.out.push(Vec::new());
        self.sink.push(Edge {
            rate: 0.0,
            reactions: Vec::new(),
        });
        self.refresh_sink(id);
        (id, true)
    }

    fn refresh_sink(&mut self, id: NodeId) {
        let state = &self.states[id];
        let mut rate = 0.0;
        let mut reactions = Vec::new();
        for s in self.crn.successors(state) {
            if &s.state == state {
                continue;
            }
            let recorded = self
                .index
                .get(&s.state)
                .is_some_and(|dst| self.edges.contains_key(&(id, *dst)));
            if !recorded {
                rate += s.rate;
                reactions.push(s.reaction);
            }
        }
        self.sink[id] = Edge { rate, reactions };
    }

    /// Adds the states and transitions of a trace. Returns how many nodes plus
    /// edges were new; re-adding a trace is a no-op.
    pub fn add_path(&mut self, trace: &Witness) -> usize {
        let mut added = 0;
        let mut prev: Option<NodeId> = None;
        for state in trace.states() {
            let (id, fresh) = self.intern(state);
            added += fresh as usize;
            if let Some(src) = prev {
                if src != id && !self.edges.contains_key(&(src, id)) {
                    let reactions = self.crn.reactions_between(&self.states[src], state);
                    let rate = reactions
                        .iter()
                        .map(|&r| self.crn.propensity(&self.states[src], r).unwrap_or(0.0))
                        .sum();
                    self.edges.insert((src, id), Edge { rate, reactions });
                    self.out[src].push(id);
                    self.refresh_sink(src);
                    added += 1;
                }
            }
            prev = Some(id);
        }
        added
    }

    /// Adds a full witness and counts it.
    pub fn add_witness(&mut self, w: &Witness) -> usize {
        self.witnesses += 1;
        self.add_path(w)
    }

    /// Recomputes every sink rate from scratch.
    pub fn complete_sink(&mut self) {
        for id in 0..self.states.len() {
            self.refresh_sink(id);
        }
    }

    pub fn witness_count(&self) -> usize {
        self.witnesses
    }

    pub fn node_count(&self) -> usize {
        self.states.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn sink_edge_count(&self) -> usize {
        self.sink.iter().filter(|e| e.rate > 0.0).count()
    }

    /// States plus transitions, not counting the sink node and its edges.
    pub fn cex_size(&self) -> usize {
        self.node_count() + self.edge_count()
    }

    /// States plus transitions including the sink node and sink edges.
    pub fn cex_size_with_sink(&self) -> usize {
        let sinks = self.sink_edge_count();
        self.cex_size() + sinks + usize::from(sinks > 0)
    }

    pub fn initial(&self) -> NodeId {
        0
    }

    /// Node id of the sink in exports and in [`Self::to_finite_ctmc`].
    pub fn sink_id(&self) -> NodeId {
        self.states.len()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, id: NodeId) -> &State {
        &self.states[id]
    }

    pub fn node_of(&self, state: &State) -> Option<NodeId> {
        self.index.get(state).copied()
    }

    pub fn contains_edge(&self, from: &State, to: &State) -> bool {
        match (self.node_of(from), self.node_of(to)) {
            (Some(a), Some(b)) => self.edges.contains_key(&(a, b)),
            _ => false,
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, &Edge)> {
        self.edges.iter().map(|(&(a, b), e)| (a, b, e))
    }

    /// All recorded transitions as state pairs.
    pub fn edge_states(&self) -> Vec<(State, State)> {
        self.edges
            .keys()
            .map(|&(a, b)| (self.states[a].clone(), self.states[b].clone()))
            .collect()
    }

    pub fn sink_edge(&self, id: NodeId) -> &Edge {
        &self.sink[id]
    }

    pub fn is_target(&self, id: NodeId) -> bool {
        id < self.states.len() && self.target.holds(&self.states[id])
    }

    pub fn target_nodes(&self) -> Vec<NodeId> {
        (0..self.states.len()).filter(|&i| self.is_target(i)).collect()
    }

    /// Sum of real and sink rates leaving `id`.
    pub fn out_rate(&self, id: NodeId) -> f64 {
        self.out[id]
            .iter()
            .map(|&d| self.edges[&(id, d)].rate)
            .sum::<f64>()
            + self.sink[id].rate
    }

    /// Nodes not reachable from the initial node over real edges.
    pub fn unreachable_nodes(&self) -> Vec<NodeId> {
        let mut seen = vec![false; self.states.len()];
        let mut queue = VecDeque::from([self.initial()]);
        seen[self.initial()] = true;
        while let Some(n) = queue.pop_front() {
            for &d in &self.out[n] {
                if !seen[d] {
                    seen[d] = true;
                    queue.push_back(d);
                }
            }
        }
        (0..seen.len()).filter(|&i| !seen[i]).collect()
    }

    /// Nodes from which no target node is reachable over real edges.
    pub fn non_coreachable_nodes(&self) -> Vec<NodeId> {
        let mut incoming = vec![Vec::new(); self.states.len()];
        for &(a, b) in self.edges.keys() {
            incoming[b].push(a);
        }
        let mut seen = vec![false; self.states.len()];
        let mut queue: VecDeque<NodeId> = self.target_nodes().into();
        for &t in &queue {
            seen[t] = true;
        }
        while let Some(n) = queue.pop_front() {
            for &p in &incoming[n] {
                if !seen[p] {
                    seen[p] = true;
                    queue.push_back(p);
                }
            }
        }
        (0..seen.len()).filter(|&i| !seen[i]).collect()
    }

    /// The graph as a finite CTMC: nodes keep their ids, the sink is
    /// [`Self::sink_id`], targets are the nodes satisfying the target predicate.
    pub fn to_finite_ctmc(&self) -> FiniteCtmc {
        let n = self.states.len();
        let mut transitions: Vec<(usize, usize, f64)> = self
            .edges
            .iter()
            .map(|(&(a, b), e)| (a, b, e.rate))
            .collect();
        for (id, e) in self.sink.iter().enumerate() {
            if e.rate > 0.0 {
                transitions.push((id, n, e.rate));
            }
        }
        let mut targets = vec![false; n + 1];
        for t in self.target_nodes() {
            targets[t] = true;
        }
        FiniteCtmc::new(n + 1, &transitions, self.initial(), targets)
            .expect("witness graph rates are positive and in range")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn s(v: &[u64]) -> State {
        State::new(v.to_vec())
    }

    fn fig2a(crn: &Crn) -> Witness {
        Witness::from_states(crn, vec![s(&[1, 40]), s(&[1, 41]), s(&[1, 42])]).unwrap()
    }

    fn graph() -> WitnessCtmc {
        let crn = Arc::new(models::single_species());
        WitnessCtmc::new(crn, Target { species: 1, value: 42 })
    }

    fn assert_rate_conservation(g: &WitnessCtmc) {
        for id in 0..g.node_count() {
            let total = g.crn().exit_rate(g.state(id));
            let out = g.out_rate(id);
            assert!((out - total).abs() <= 1e-12 * total.max(1.0), "node {id}: {out} vs {total}");
        }
    }

    #[test]
    fn witness_validation() {
        let crn = models::single_species();
        let w = fig2a(&crn);
        assert_eq!(w.reactions(), &[0, 0]);
        assert_eq!(w.len(), 2);
        assert!(w.is_loop_free());
        assert!(Witness::from_states(&crn, vec![s(&[1, 40]), s(&[1, 42])]).is_err());
        assert!(Witness::new(&crn, vec![s(&[1, 40]), s(&[1, 41])], vec![1]).is_err());
        assert!(Witness::new(&crn, vec![s(&[1, 40])], vec![0]).is_err());
        let zero = Witness::from_states(&crn, vec![s(&[1, 40])]).unwrap();
        assert!(zero.is_empty());
    }

    #[test]
    fn concat_requires_shared_endpoint() {
        let crn = models::single_species();
        let a = Witness::from_states(&crn, vec![s(&[1, 40]), s(&[1, 41])]).unwrap();
        let b = Witness::from_states(&crn, vec![s(&[1, 41]), s(&[1, 42])]).unwrap();
        let ab = a.clone().concat(&b).unwrap();
        assert_eq!(ab, fig2a(&crn));
        assert!(b.concat(&a).is_err());
    }

    #[test]
    fn fig2b_construction() {
        let mut g = graph();
        let w = fig2a(g.crn());
        let added = g.add_witness(&w);
        assert_eq!(added, 2 + 2);
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        for (_, _, e) in g.edges() {
            assert_eq!(e.rate, 1.0);
            assert_eq!(e.reactions, vec![0]);
        }
        // Sink rates from the propensities of the missing reactions.
        assert!((g.sink_edge(0).rate - 1.0).abs() < 1e-12);
        assert!((g.sink_edge(1).rate - 1.025).abs() < 1e-12);
        assert!((g.sink_edge(2).rate - 2.05).abs() < 1e-12);
        assert_eq!(g.sink_edge(2).reactions, vec![0, 1]);
        assert_rate_conservation(&g);
        assert_eq!(g.cex_size(), 5);
        assert_eq!(g.cex_size_with_sink(), 9);
    }

    #[test]
    fn idempotent() {
        let mut g = graph();
        let w = fig2a(g.crn());
        g.add_witness(&w);
        let before = (g.node_count(), g.edge_count(), g.sink.clone());
        assert_eq!(g.add_path(&w), 0);
        assert_eq!((g.node_count(), g.edge_count(), g.sink.clone()), before);
    }

    #[test]
    fn fig2c_expansion() {
        let mut g = graph();
        let w = fig2a(g.crn());
        g.add_witness(&w);
        let crn = g.crn().clone();
        let back = Witness::from_states(&crn, vec![s(&[1, 41]), s(&[1, 40])]).unwrap();
        let dip = Witness::from_states(&crn, vec![s(&[1, 40]), s(&[1, 39]), s(&[1, 40])]).unwrap();
        assert_eq!(g.add_path(&back), 1);
        assert_eq!(g.add_path(&dip), 3);
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 5);
        // [1,40] now has both reactions recorded.
        assert_eq!(g.sink_edge(0).rate, 0.0);
        assert_rate_conservation(&g);
        assert!(g.unreachable_nodes().is_empty());
        assert!(g.non_coreachable_nodes().is_empty());
    }

    #[test]
    fn merged_parallel_reactions() {
        let crn = Arc::new(
            crate::crn::parse_crn("species A=2\nspecies B=0\nA -> B @ 1\nA -> B @ 3\nB -> @ 1").unwrap(),
        );
        let mut g = WitnessCtmc::new(crn.clone(), Target { species: 1, value: 1 });
        let w = Witness::from_states(&crn, vec![s(&[2, 0]), s(&[1, 1])]).unwrap();
        g.add_witness(&w);
        let (_, _, e) = g.edges().next().unwrap();
        assert_eq!(e.reactions, vec![0, 1]);
        assert_eq!(e.rate, 2.0 + 6.0);
        assert_eq!(g.sink_edge(0).rate, 0.0);
        assert_rate_conservation(&g);
    }

    #[test]
    fn finite_ctmc_view() {
        let mut g = graph();
        let w = fig2a(g.crn());
        g.add_witness(&w);
        let c = g.to_finite_ctmc();
        assert_eq!(c.len(), 4);
        assert_eq!(c.initial(), 0);
        assert_eq!(c.targets(), &[false, false, true, false]);
        assert!((c.exit_rate(1) - 2.025).abs() < 1e-12);
        assert_eq!(c.exit_rate(3), 0.0);
    }
}
