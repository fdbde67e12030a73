//! The counterexample loop: BMC witnesses are overlaid into a witness CTMC
//! until its time-bounded reachability probability exceeds the threshold.

mod dnc;
mod scaffold;

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use log::info;
use serde::Serialize;
use thiserror::Error;

pub use dnc::{find_witness_dnc, segment_targets, DncSearch};
pub use scaffold::scaffold_round;

use crate::bmc::{encode_bmc, encode_exclusion, UnrollContext};
use crate::crn::{Crn, CrnError, Property, Target};
use crate::smt::{extract_witness, SatAnswer, SmtError, SolverConfig, SolverSession};
use crate::transient::{TransientError, TransientOptions};
use crate::witness::{Witness, WitnessCtmc, WitnessError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] CrnError),
    #[error(transparent)]
    Solver(#[from] SmtError),
    #[error(transparent)]
    Probability(#[from] TransientError),
    #[error("invalid witness: {0}")]
    Witness(#[from] WitnessError),
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    /// Divide-and-conquer step; 0 disables it.
    pub delta: u64,
    /// Witnesses between scaffold rounds; 0 disables scaffolding.
    pub scaffold_trigger: usize,
    pub scaffold_j_max: usize,
    pub scaffold_count: usize,
    /// Growth of the graph (nodes + edges) between probability evaluations.
    pub recheck_growth: usize,
    pub max_bound: usize,
    pub budget: Duration,
    /// Largest bound tried for one divide-and-conquer segment; `None` means `8 * delta`.
    pub dnc_segment_cap: Option<usize>,
    pub solver: SolverConfig,
    pub transient: TransientOptions,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            delta: 0,
            scaffold_trigger: 3,
            scaffold_j_max: 3,
            scaffold_count: 50,
            recheck_growth: 25,
            max_bound: 500,
            budget: Duration::from_secs(1800),
            dnc_segment_cap: None,
            solver: SolverConfig::default(),
            transient: TransientOptions::default(),
        }
    }
}

impl EngineConfig {
    pub fn scaffolding(&self) -> bool {
        self.scaffold_trigger > 0
    }

    pub fn segment_cap(&self) -> usize {
        self.dnc_segment_cap.unwrap_or(8 * self.delta as usize)
    }

    fn validate(&self, crn: &Crn, target: Target) -> Result<(), EngineError> {
        if self.scaffolding() && (self.scaffold_j_max == 0 || self.scaffold_count == 0) {
            return Err(EngineError::Config(
                "scaffold length and count must be positive".into(),
            ));
        }
        if self.recheck_growth == 0 {
            return Err(EngineError::Config("recheck growth must be positive".into()));
        }
        if target.species >= crn.species_count() {
            return Err(EngineError::Config(format!(
                "target species index {} out of range",
                target.species
            )));
        }
        if self.delta > 0 {
            segment_targets(crn, target, self.delta)?;
        }
        Ok(())
    }
}

/// Why a run stopped without a counterexample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Threshold,
    MaxBound,
    WallClock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbabilityPoint {
    pub witnesses: usize,
    pub size: usize,
    pub bound: usize,
    pub probability: f64,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timings {
    pub solving_secs: f64,
    pub probability_secs: f64,
    pub graph_secs: f64,
}

#[derive(Debug, Clone)]
pub struct CexResult {
    pub ctmc: WitnessCtmc,
    pub probability: f64,
    pub witness_count: usize,
    pub scaffold_fragments: usize,
    /// Witnesses found by BMC or divide-and-conquer, in order (scaffold
    /// fragments are not included).
    pub witnesses: Vec<Witness>,
    pub iterations: usize,
    pub bound: usize,
    pub elapsed: Duration,
    pub timings: Timings,
    pub history: Vec<ProbabilityPoint>,
    pub stop: StopReason,
}

impl CexResult {
    pub fn longest_witness(&self) -> usize {
        self.witnesses.iter().map(Witness::len).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub enum CexOutcome {
    Counterexample(CexResult),
    BudgetExhausted(CexResult),
}

impl CexOutcome {
    pub fn result(&self) -> &CexResult {
        match self {
            CexOutcome::Counterexample(r) | CexOutcome::BudgetExhausted(r) => r,
        }
    }

    pub fn into_result(self) -> CexResult {
        match self {
            CexOutcome::Counterexample(r) | CexOutcome::BudgetExhausted(r) => r,
        }
    }

    pub fn is_counterexample(&self) -> bool {
        matches!(self, CexOutcome::Counterexample(_))
    }
}

/// The plain BMC flow: one bound at a time, exclusions asserted as found.
struct MainFlow {
    bound: usize,
    loaded: bool,
}

impl MainFlow {
    fn next(
        &mut self,
        session: &mut SolverSession,
        crn: &Crn,
        target: Target,
    ) -> Result<Option<Witness>, EngineError> {
        if !self.loaded {
            session.reset()?;
            session.assert_formula(&encode_bmc(crn, target, self.bound))?;
            self.loaded = true;
        }
        match session.check()? {
            SatAnswer::Unsat => Ok(None),
            SatAnswer::Sat => {
                let ctx = UnrollContext::new(crn, self.bound);
                let vars: BTreeSet<_> = ctx.state_vars().into_iter().collect();
                let model = session.model(&vars)?;
                let w = extract_witness(&model, &ctx)?;
                session.assert_formula(&encode_exclusion(&w))?;
                Ok(Some(w))
            }
        }
    }

    fn advance(&mut self) {
        self.bound += 1;
        self.loaded = false;
    }
}

struct Run<'a> {
    crn: Arc<Crn>,
    prop: &'a Property,
    config: &'a EngineConfig,
    start: Instant,
    deadline: Instant,
    graph: WitnessCtmc,
    probability: f64,
    evaluated_size: Option<usize>,
    history: Vec<ProbabilityPoint>,
    timings: Timings,
    witnesses: Vec<Witness>,
    scaffold_fragments: usize,
    iterations: usize,
    bound: usize,
}

impl Run<'_> {
    fn out_of_time(&self) -> bool {
        Instant::now() >= self.deadline
    }

    fn succeeded(&self) -> bool {
        self.probability > self.prop.threshold
    }

    /// Re-evaluates the probability if the graph grew by at least `growth`.
    fn evaluate(&mut self, growth: usize) -> Result<(), EngineError> {
        let size = self.graph.cex_size();
        if let Some(last) = self.evaluated_size {
            if size < last + growth {
                return Ok(());
            }
        }
        let t = Instant::now();
        let p = self
            .graph
            .to_finite_ctmc()
            .reach_probability_with(self.prop.time_bound, &self.config.transient)?;
        self.timings.probability_secs += t.elapsed().as_secs_f64();
        // Probabilities of nested sub-CTMCs cannot decrease; keep the best
        // lower bound if rounding says otherwise.
        self.probability = self.probability.max(p);
        self.evaluated_size = Some(size);
        let point = ProbabilityPoint {
            witnesses: self.graph.witness_count(),
            size,
            bound: self.bound,
            probability: self.probability,
            elapsed_secs: self.start.elapsed().as_secs_f64(),
        };
        info!(
            "k={} witnesses={} size={} probability={:e}",
            point.bound, point.witnesses, point.size, point.probability
        );
        self.history.push(point);
        Ok(())
    }

    fn add_witness(&mut self, w: &Witness) {
        let t = Instant::now();
        self.graph.add_witness(w);
        self.witnesses.push(w.clone());
        self.timings.graph_secs += t.elapsed().as_secs_f64();
    }

    /// One scaffold round; returns the number of fragments added.
    fn scaffold(&mut self, session: &mut SolverSession) -> Result<usize, EngineError> {
        let fragments = scaffold_round(
            session,
            &mut self.graph,
            self.config.scaffold_j_max,
            self.config.scaffold_count,
        )?;
        self.scaffold_fragments += fragments.len();
        info!("scaffold round: {} fragments", fragments.len());
        Ok(fragments.len())
    }

    fn finish(mut self, stop: StopReason, solve_secs: f64) -> CexOutcome {
        self.timings.solving_secs = solve_secs;
        let result = CexResult {
            witness_count: self.graph.witness_count(),
            ctmc: self.graph,
            probability: self.probability,
            scaffold_fragments: self.scaffold_fragments,
            witnesses: self.witnesses,
            iterations: self.iterations,
            bound: self.bound,
            elapsed: self.start.elapsed(),
            timings: self.timings,
            history: self.history,
            stop,
        };
        if stop == StopReason::Threshold {
            CexOutcome::Counterexample(result)
        } else {
            CexOutcome::BudgetExhausted(result)
        }
    }
}

fn is_budget_timeout(e: &EngineError, deadline: Instant) -> bool {
    matches!(e, EngineError::Solver(SmtError::Timeout { .. })) && Instant::now() >= deadline
}

/// Searches for a witness CTMC whose probability of reaching the target
/// within the time bound exceeds the property threshold.
pub fn generate_counterexample(
    crn: &Crn,
    prop: &Property,
    config: &EngineConfig,
) -> Result<CexOutcome, EngineError> {
    config.validate(crn, prop.target)?;
    let start = Instant::now();
    let deadline = start + config.budget;
    let crn = Arc::new(crn.clone());
    let target = prop.target;

    let mut main_session = SolverSession::spawn(config.solver.clone())?;
    main_session.set_deadline(Some(deadline));
    let mut aux_session = SolverSession::spawn(config.solver.clone())?;
    aux_session.set_deadline(Some(deadline));

    // Every transition moves the target species by at most one.
    let distance = crn.initial().get(target.species).abs_diff(target.value) as usize;
    let mut main = MainFlow {
        bound: distance,
        loaded: false,
    };
    let mut dnc = if config.delta > 0 {
        Some(DncSearch::new(&crn, target, config.delta, config.segment_cap())?)
    } else {
        None
    };

    let mut run = Run {
        graph: WitnessCtmc::new(crn.clone(), target),
        crn,
        prop,
        config,
        start,
        deadline,
        probability: 0.0,
        evaluated_size: None,
        history: Vec::new(),
        timings: Timings::default(),
        witnesses: Vec::new(),
        scaffold_fragments: 0,
        iterations: 0,
        bound: distance,
    };

    let outcome = drive(&mut run, &mut main, &mut dnc, &mut main_session, &mut aux_session);
    let solve = (main_session.solve_time() + aux_session.solve_time()).as_secs_f64();
    match outcome {
        Ok(stop) => {
            // Account for growth since the last evaluation before reporting.
            if stop != StopReason::Threshold {
                run.evaluate(1)?;
                if run.succeeded() {
                    return Ok(run.finish(StopReason::Threshold, solve));
                }
            }
            Ok(run.finish(stop, solve))
        }
        Err(e) if is_budget_timeout(&e, deadline) => {
            run.evaluate(1)?;
            let stop = if run.succeeded() {
                StopReason::Threshold
            } else {
                StopReason::WallClock
            };
            Ok(run.finish(stop, solve))
        }
        Err(e) => Err(e),
    }
}

fn drive(
    run: &mut Run<'_>,
    main: &mut MainFlow,
    dnc: &mut Option<DncSearch>,
    main_session: &mut SolverSession,
    aux_session: &mut SolverSession,
) -> Result<StopReason, EngineError> {
    let config = run.config;
    let target = run.prop.target;
    let mut since_scaffold = 0;
    loop {
        if run.succeeded() {
            return Ok(StopReason::Threshold);
        }
        if run.out_of_time() {
            return Ok(StopReason::WallClock);
        }
        run.iterations += 1;

        let found = match dnc {
            Some(search) => match search.next_witness(aux_session, &run.crn)? {
                Some(w) => Some(w),
                None => {
                    info!("divide-and-conquer exhausted; continuing with plain BMC");
                    *dnc = None;
                    continue;
                }
            },
            None => {
                let crn = run.crn.clone();
                main.next(main_session, &crn, target)?
            }
        };

        match found {
            Some(w) => {
                run.add_witness(&w);
                since_scaffold += 1;
                if config.scaffolding() && since_scaffold >= config.scaffold_trigger {
                    since_scaffold = 0;
                    run.scaffold(aux_session)?;
                }
                run.evaluate(config.recheck_growth)?;
            }
            None => {
                // Bound exhausted: grow the graph from what is known before
                // paying for a larger encoding.
                run.evaluate(1)?;
                if config.scaffolding() && run.graph.witness_count() > 0 {
                    loop {
                        if run.succeeded() || run.out_of_time() {
                            break;
                        }
                        let before = run.probability;
                        if run.scaffold(aux_session)? == 0 {
                            break;
                        }
                        run.evaluate(1)?;
                        if run.probability <= before * (1.0 + 1e-3) {
                            break;
                        }
                    }
                    since_scaffold = 0;
                    if run.succeeded() {
                        continue;
                    }
                }
                if main.bound >= config.max_bound {
                    return Ok(StopReason::MaxBound);
                }
                main.advance();
                run.bound = main.bound;
                info!("bound {}", main.bound);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn defaults() {
        let c = EngineConfig::default();
        assert_eq!(
            (c.scaffold_trigger, c.scaffold_j_max, c.scaffold_count, c.recheck_growth, c.max_bound),
            (3, 3, 50, 25, 500)
        );
        assert_eq!(c.budget, Duration::from_secs(1800));
    }

    #[test]
    fn divisibility() {
        let crn = models::single_species();
        let t = Target { species: 1, value: 70 };
        assert_eq!(segment_targets(&crn, t, 10).unwrap(), vec![50, 60, 70]);
        assert!(matches!(segment_targets(&crn, t, 7), Err(EngineError::Config(_))));
        let down = Target { species: 1, value: 30 };
        assert_eq!(segment_targets(&crn, down, 5).unwrap(), vec![35, 30]);
        let c = EngineConfig {
            delta: 7,
            ..EngineConfig::default()
        };
        assert!(c.validate(&crn, t).is_err());
    }
}
