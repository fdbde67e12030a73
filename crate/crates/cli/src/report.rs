use serde::Serialize;

use crn_cex::engine::{CexOutcome, EngineConfig, ProbabilityPoint, StopReason, Timings};

#[derive(Debug, Serialize)]
pub struct InputEcho {
    pub model: String,
    pub sha256: String,
    pub target: String,
    pub time_bound: f64,
    pub threshold: f64,
}

#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub delta: u64,
    pub scaffold_trigger: usize,
    pub scaffold_j_max: usize,
    pub scaffold_count: usize,
    pub recheck_growth: usize,
    pub max_bound: usize,
    pub budget_secs: u64,
    pub dnc_segment_cap: usize,
    pub solver: String,
    pub solver_timeout_secs: u64,
    pub epsilon: f64,
}

impl From<&EngineConfig> for ConfigEcho {
    fn from(c: &EngineConfig) -> Self {
        ConfigEcho {
            delta: c.delta,
            scaffold_trigger: c.scaffold_trigger,
            scaffold_j_max: c.scaffold_j_max,
            scaffold_count: c.scaffold_count,
            recheck_growth: c.recheck_growth,
            max_bound: c.max_bound,
            budget_secs: c.budget.as_secs(),
            dnc_segment_cap: c.segment_cap(),
            solver: c.solver.command.join(" "),
            solver_timeout_secs: c.solver.timeout.as_secs(),
            epsilon: c.transient.epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Counterexample,
    BudgetExhausted,
    Error,
}

/// Everything about one `check` run; timing fields aside, identical inputs
/// give identical reports.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub input: InputEcho,
    pub config: ConfigEcho,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_reason: Option<StopReason>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub probability: Option<f64>,
    /// States plus transitions, without the sink.
    pub cex_size: Option<usize>,
    /// States plus transitions, counting the sink state and its edges.
    pub cex_size_with_sink: Option<usize>,
    pub nodes: Option<usize>,
    pub edges: Option<usize>,
    pub witness_count: Option<usize>,
    pub scaffold_fragments: Option<usize>,
    pub longest_witness: Option<usize>,
    pub bound: Option<usize>,
    pub elapsed_secs: Option<f64>,
    pub timings: Option<Timings>,
    pub history: Vec<ProbabilityPoint>,
}

impl RunReport {
    pub fn new(input: InputEcho, config: ConfigEcho) -> Self {
        RunReport {
            input,
            config,
            outcome: Outcome::Error,
            stop_reason: None,
            error: None,
            probability: None,
            cex_size: None,
            cex_size_with_sink: None,
            nodes: None,
            edges: None,
            witness_count: None,
            scaffold_fragments: None,
            longest_witness: None,
            bound: None,
            elapsed_secs: None,
            timings: None,
            history: Vec::new(),
        }
    }

    pub fn record(&mut self, outcome: &CexOutcome) {
        let r = outcome.result();
        self.outcome = if outcome.is_counterexample() {
            Outcome::Counterexample
        } else {
            Outcome::BudgetExhausted
        };
        self.stop_reason = Some(r.stop);
        self.probability = Some(r.probability);
        self.cex_size = Some(r.ctmc.cex_size());
        self.cex_size_with_sink = Some(r.ctmc.cex_size_with_sink());
        self.nodes = Some(r.ctmc.node_count());
        self.edges = Some(r.ctmc.edge_count());
        self.witness_count = Some(r.witness_count);
        self.scaffold_fragments = Some(r.scaffold_fragments);
        self.longest_witness = Some(r.longest_witness());
        self.bound = Some(r.bound);
        self.elapsed_secs = Some(r.elapsed.as_secs_f64());
        self.timings = Some(r.timings);
        self.history = r.history.clone();
    }

    pub fn fail(&mut self, message: String) {
        self.outcome = Outcome::Error;
        self.error = Some(message);
    }
}
