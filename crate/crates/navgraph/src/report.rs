//! JSON result documents. Field names are stable; see
//! `schema/solve-result.schema.json` for the solve output.

use navgraph_core::{
    Edge, Graph, LatticeSpec, McEstimate, Metric, ObjectiveValue, SolveResult, SolveStats, SymmetryGroup, WalkTrace,
};
use serde::{Deserialize, Serialize};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeDto {
    pub rows: usize,
    pub cols: usize,
    pub n: usize,
}

impl From<&LatticeSpec> for LatticeDto {
    fn from(s: &LatticeSpec) -> Self {
        LatticeDto { rows: s.rows(), cols: s.cols(), n: s.n() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactConfig {
    pub symmetry_pruning: bool,
    pub bound: String,
    pub split_depth: usize,
    pub wave_size: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub candidates: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    pub strategy: String,
    pub restarts: usize,
    pub max_iterations: usize,
    pub initial_temperature: f64,
    pub cooling_rate: f64,
}

/// Everything that determines a run's result. The worker count is left
/// out on purpose: it never changes the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub lattice: String,
    pub metric: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mode: Option<String>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub time_limit_secs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub graph_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warm_start: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact: Option<ExactConfig>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub heuristic: Option<HeuristicConfig>,
}

impl RunConfig {
    pub fn new(command: &str, spec: &LatticeSpec, metric: Metric) -> Self {
        RunConfig {
            command: command.to_string(),
            lattice: spec.to_string(),
            metric: metric.name().to_string(),
            mode: None,
            seed: 0,
            time_limit_secs: None,
            graph_file: None,
            warm_start: None,
            exact: None,
            heuristic: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDto {
    /// All edges, base edges included, ascending.
    pub edges: Vec<[usize; 2]>,
    pub shortcuts: Vec<[usize; 2]>,
    pub canonical_key: String,
}

impl GraphDto {
    pub fn new(g: &Graph, sym: &SymmetryGroup) -> Self {
        GraphDto {
            edges: pairs(&g.edges()),
            shortcuts: pairs(&g.extra_edges()),
            canonical_key: g.canonical_key(sym).to_string(),
        }
    }

    pub fn to_graph(&self, spec: &LatticeSpec) -> Result<Graph, navgraph_core::Error> {
        let edges: Vec<Edge> = self.edges.iter().map(|&[u, v]| Edge(u, v)).collect();
        Graph::new(spec, &edges)
    }
}

fn pairs(edges: &[Edge]) -> Vec<[usize; 2]> {
    edges.iter().map(|e| [e.0, e.1]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsDto {
    pub nodes_explored: u64,
    pub pruned_by_bound: u64,
    pub pruned_by_symmetry: u64,
    pub leaves_evaluated: u64,
    pub tasks: u64,
    pub iterations: u64,
    pub accepted_moves: u64,
    /// Only present when timing was requested, so default output is
    /// reproducible byte for byte.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_secs: Option<f64>,
}

impl StatsDto {
    fn new(s: &SolveStats, wall_time_secs: Option<f64>) -> Self {
        StatsDto {
            nodes_explored: s.nodes_explored,
            pruned_by_bound: s.pruned_by_bound,
            pruned_by_symmetry: s.pruned_by_symmetry,
            leaves_evaluated: s.leaves_evaluated,
            tasks: s.tasks,
            iterations: s.iterations,
            accepted_moves: s.accepted_moves,
            wall_time_secs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub version: String,
    pub config: RunConfig,
    pub metric: String,
    pub lattice: LatticeDto,
    /// `best_total / n^2`; null when no feasible graph was found.
    pub best_value: Option<f64>,
    pub best_total: Option<u64>,
    pub graphs: Vec<GraphDto>,
    pub stats: StatsDto,
    pub feasible: bool,
    pub proof_of_optimality: bool,
}

impl SolveReport {
    pub fn new(config: RunConfig, spec: &LatticeSpec, metric: Metric, r: &SolveResult, wall_time_secs: Option<f64>) -> Self {
        let sym = spec.symmetry_group();
        SolveReport {
            version: VERSION.to_string(),
            config,
            metric: metric.name().to_string(),
            lattice: spec.into(),
            best_value: r.best_value(),
            best_total: r.best_total,
            graphs: r.best_graphs.iter().map(|(_, g)| GraphDto::new(g, &sym)).collect(),
            stats: StatsDto::new(&r.stats, wall_time_secs),
            feasible: r.best_total.is_some(),
            proof_of_optimality: r.proof_of_optimality,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloDto {
    pub sampler: String,
    pub samples: u64,
    pub seed: u64,
    pub sample_start: bool,
    pub mean: f64,
    pub std_error: f64,
    pub stalled_walks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateReport {
    pub version: String,
    pub config: RunConfig,
    pub metric: String,
    pub lattice: LatticeDto,
    pub value: Option<f64>,
    pub total: Option<u64>,
    pub feasible: bool,
    pub failing_pairs: Vec<[usize; 2]>,
    pub graph: GraphDto,
    pub missing_base_edges: Vec<[usize; 2]>,
    /// `pair_costs[start][target]`, null for stuck walks.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pair_costs: Option<Vec<Vec<Option<u32>>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub monte_carlo: Option<MonteCarloDto>,
}

impl EvaluateReport {
    pub fn new(config: RunConfig, g: &Graph, metric: Metric, obj: &ObjectiveValue, missing: &[Edge], with_pairs: bool) -> Self {
        let spec = g.spec();
        EvaluateReport {
            version: VERSION.to_string(),
            config,
            metric: metric.name().to_string(),
            lattice: spec.into(),
            value: obj.value(),
            total: obj.total_cost(),
            feasible: obj.is_feasible(),
            failing_pairs: obj.failing_pairs().into_iter().map(|(s, t)| [s, t]).collect(),
            graph: GraphDto::new(g, &spec.symmetry_group()),
            missing_base_edges: pairs(missing),
            pair_costs: with_pairs.then(|| obj.pair_costs()),
            monte_carlo: None,
        }
    }

    pub fn with_monte_carlo(mut self, sampler: &str, seed: u64, sample_start: bool, est: &McEstimate) -> Self {
        self.monte_carlo = Some(MonteCarloDto {
            sampler: sampler.to_string(),
            samples: est.samples,
            seed,
            sample_start,
            mean: est.mean,
            std_error: est.std_error,
            stalled_walks: est.stalled_walks,
        });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDto {
    pub vertex: usize,
    pub distance: f64,
    pub examined: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkReport {
    pub version: String,
    pub config: RunConfig,
    pub metric: String,
    pub lattice: LatticeDto,
    pub start: usize,
    pub query: [f64; 2],
    pub target: usize,
    pub path: Vec<usize>,
    pub steps: Vec<StepDto>,
    pub computed_set: Vec<usize>,
    pub operations: usize,
    pub reached_target: bool,
}

impl WalkReport {
    pub fn new(config: RunConfig, spec: &LatticeSpec, metric: Metric, start: usize, t: &WalkTrace) -> Self {
        WalkReport {
            version: VERSION.to_string(),
            config,
            metric: metric.name().to_string(),
            lattice: spec.into(),
            start,
            query: t.query,
            target: t.target,
            path: t.path.clone(),
            steps: t
                .steps
                .iter()
                .map(|s| StepDto { vertex: s.vertex, distance: s.distance, examined: s.examined.clone() })
                .collect(),
            computed_set: t.computed_set.clone(),
            operations: t.cost(),
            reached_target: t.reached_target,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateReport {
    pub version: String,
    pub config: RunConfig,
    pub metric: String,
    pub lattice: LatticeDto,
    pub feasible: bool,
    pub failing_pairs: Vec<[usize; 2]>,
    pub missing_base_edges: Vec<[usize; 2]>,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}
