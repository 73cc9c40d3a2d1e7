//! Command-line front end. Exit codes: 0 ok or feasible, 1 infeasible,
//! 2 usage, parse or IO error.

use crate::driver::{solve_exact, solve_heuristic, Deadline};
use crate::edgelist::{self, EdgeList};
use crate::report::*;
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use navgraph_core::{
    brute_force, BoundKind, BranchAndBound, BranchOptions, Edge, Evaluator, Graph, HeuristicOptions, LatticeSpec,
    McOptions, Metric, QuerySampler, Strategy,
};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

#[derive(Debug, Parser)]
#[command(name = "navgraph", version, about = "Greedy-walk cost minimizing topologies on 2-D lattices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Objective, feasibility and optional per-pair costs of one graph.
    Evaluate(EvaluateArgs),
    /// Search for an optimal set of shortcut edges.
    Solve(SolveArgs),
    /// Trace one greedy walk toward a query point.
    Walk(WalkArgs),
    /// Check that every start reaches every target; exit 1 otherwise.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Lattice size as ROWSxCOLS.
    #[arg(long, value_parser = parse_lattice)]
    pub lattice: LatticeSpec,
    /// l1, l2 or linf.
    #[arg(long, value_parser = parse_metric)]
    pub metric: Metric,
    /// Write JSON here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Edge-list file; the bare lattice when omitted.
    pub graph: Option<PathBuf>,
    /// Include the full start x target cost table.
    #[arg(long)]
    pub pairs: bool,
    /// Also estimate the objective by Monte Carlo with this many samples.
    #[arg(long)]
    pub mc_samples: Option<u64>,
    #[arg(long, value_enum, default_value_t = SamplerArg::Nodes)]
    pub sampler: SamplerArg,
    /// Draw the start vertex per sample instead of averaging over starts.
    #[arg(long)]
    pub sample_start: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Nodes,
    Cells,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Heuristic,
    Brute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundArg {
    Walk,
    Degree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Annealing,
    Descent,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; never changes the result.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Stop the exact search after this many seconds (no proof then).
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Edge-list file used as the initial incumbent.
    #[arg(long)]
    pub warm_start: Option<PathBuf>,
    /// Edge-list file restricting the candidate shortcuts.
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    #[arg(long)]
    pub no_symmetry: bool,
    #[arg(long, value_enum, default_value_t = BoundArg::Walk)]
    pub bound: BoundArg,
    #[arg(long, default_value_t = 10)]
    pub split_depth: usize,
    #[arg(long, default_value_t = 16)]
    pub wave_size: usize,
    #[arg(long, value_enum, default_value_t = StrategyArg::Annealing)]
    pub strategy: StrategyArg,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub cooling: Option<f64>,
    /// Write one DOT file per optimal graph into this directory.
    #[arg(long)]
    pub dot: Option<PathBuf>,
    /// Progress lines on stderr.
    #[arg(long)]
    pub progress: bool,
    /// Record wall time in the stats (makes output run-dependent).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub start: usize,
    /// Query point as X,Y in lattice coordinates (column, row).
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub query: [f64; 2],
    /// Edge-list file; the bare lattice when omitted.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Edge-list file; the bare lattice when omitted.
    pub graph: Option<PathBuf>,
}

pub fn parse_lattice(s: &str) -> Result<LatticeSpec, String> {
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected ROWSxCOLS, got {s:?}"))?;
    let r: usize = r.trim().parse().map_err(|_| format!("bad row count in {s:?}"))?;
    let c: usize = c.trim().parse().map_err(|_| format!("bad column count in {s:?}"))?;
    LatticeSpec::new(r, c).map_err(|e| e.to_string())
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: &str| e.to_string())
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected X,Y, got {s:?}"))?;
    let p = |t: &str| t.trim().parse::<f64>().ok().filter(|v| v.is_finite());
    match (p(x), p(y)) {
        (Some(x), Some(y)) => Ok([x, y]),
        _ => Err(format!("bad coordinates {s:?}")),
    }
}

/// Outcome of a command: the text for stdout and the exit code to use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub json: String,
    pub code: i32,
}

fn ok_if(json: String, feasible: bool) -> Outcome {
    Outcome { json, code: if feasible { 0 } else { 1 } }
}

fn load_graph(path: Option<&Path>, spec: &LatticeSpec) -> Result<EdgeList> {
    let Some(path) = path else {
        return Ok(EdgeList { graph: Graph::bare(spec), missing_base: Vec::new() });
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let list = edgelist::parse(&text, spec).with_context(|| format!("parsing {}", path.display()))?;
    if !list.missing_base.is_empty() {
        eprintln!(
            "notice: {} lattice edge(s) missing from {}; added",
            list.missing_base.len(),
            path.display()
        );
    }
    Ok(list)
}

fn path_string(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

pub fn evaluate(a: &EvaluateArgs) -> Result<Outcome> {
    let spec = a.common.lattice;
    let m = a.common.metric;
    let list = load_graph(a.graph.as_deref(), &spec)?;
    let eval = Evaluator::new(&spec, m);
    let obj = eval.objective(&list.graph);
    let mut config = RunConfig::new("evaluate", &spec, m);
    config.graph_file = path_string(&a.graph);
    config.seed = a.seed;
    let mut report = EvaluateReport::new(config, &list.graph, m, &obj, &list.missing_base, a.pairs);
    if let Some(samples) = a.mc_samples {
        let (sampler, name) = match a.sampler {
            SamplerArg::Nodes => (QuerySampler::NodeAtoms, "nodes"),
            SamplerArg::Cells => (QuerySampler::UniformCells, "cells"),
        };
        let opts = McOptions { sampler, samples, seed: a.seed, sample_start: a.sample_start };
        let est = eval.monte_carlo(&list.graph, &opts)?;
        report = report.with_monte_carlo(name, a.seed, a.sample_start, &est);
    }
    Ok(ok_if(to_json(&report), obj.is_feasible()))
}

fn heuristic_options(a: &SolveArgs) -> HeuristicOptions {
    let d = HeuristicOptions::default();
    HeuristicOptions {
        strategy: match a.strategy {
            StrategyArg::Annealing => Strategy::SimulatedAnnealing,
            StrategyArg::Descent => Strategy::SteepestDescent,
        },
        restarts: a.restarts.unwrap_or(d.restarts),
        max_iterations: a.iterations.unwrap_or(d.max_iterations),
        initial_temperature: a.temperature.unwrap_or(d.initial_temperature),
        cooling_rate: a.cooling.unwrap_or(d.cooling_rate),
        seed: a.seed,
    }
}

pub fn solve(a: &SolveArgs) -> Result<Outcome> {
    let spec = a.common.lattice;
    let m = a.common.metric;
    let mut config = RunConfig::new("solve", &spec, m);
    config.seed = a.seed;
    config.time_limit_secs = a.time_limit;
    config.warm_start = path_string(&a.warm_start);
    let candidates: Option<Vec<Edge>> = match &a.candidates {
        Some(p) => Some(load_graph(Some(p), &spec)?.graph.extra_edges()),
        None => None,
    };
    let limit = match a.time_limit {
        Some(s) if s.is_finite() && s >= 0.0 => Some(Duration::from_secs_f64(s)),
        Some(s) => bail!("invalid time limit {s}"),
        None => None,
    };
    let started = Instant::now();
    let result = match a.mode {
        Mode::Brute => {
            config.mode = Some("brute".into());
            brute_force(&spec, m, candidates.as_deref())?
        }
        Mode::Exact => {
            config.mode = Some("exact".into());
            let opts = BranchOptions {
                symmetry_pruning: !a.no_symmetry,
                initial_incumbent: match &a.warm_start {
                    Some(p) => Some(load_graph(Some(p), &spec)?.graph),
                    None => None,
                },
                bound: match a.bound {
                    BoundArg::Walk => BoundKind::Walk,
                    BoundArg::Degree => BoundKind::Degree,
                },
                candidates: candidates.clone(),
                split_depth: a.split_depth,
                wave_size: a.wave_size,
            };
            config.exact = Some(ExactConfig {
                symmetry_pruning: opts.symmetry_pruning,
                bound: match opts.bound {
                    BoundKind::Walk => "walk".into(),
                    BoundKind::Degree => "degree".into(),
                },
                split_depth: opts.split_depth,
                wave_size: opts.wave_size,
                candidates: candidates.as_ref().map(|c| c.iter().map(|e| [e.0, e.1]).collect()),
            });
            let bb = BranchAndBound::new(&spec, m, &opts)?;
            solve_exact(&bb, a.workers, &Deadline::after(limit), a.progress)
        }
        Mode::Heuristic => {
            config.mode = Some("heuristic".into());
            let opts = heuristic_options(a);
            config.heuristic = Some(HeuristicConfig {
                strategy: opts.strategy.name().into(),
                restarts: opts.restarts,
                max_iterations: opts.max_iterations,
                initial_temperature: opts.initial_temperature,
                cooling_rate: opts.cooling_rate,
            });
            solve_heuristic(&spec, m, &opts, a.workers)?
        }
    };
    let wall = a.timing.then(|| started.elapsed().as_secs_f64());
    let report = SolveReport::new(config, &spec, m, &result, wall);
    if let Some(dir) = &a.dot {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (i, (_, g)) in result.best_graphs.iter().enumerate() {
            let name = format!("{spec}-{m}-{i}");
            let path = dir.join(format!("{name}.dot"));
            std::fs::write(&path, crate::dot::to_dot(g, &name)).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(ok_if(to_json(&report), report.feasible))
}

pub fn walk(a: &WalkArgs) -> Result<Outcome> {
    let spec = a.common.lattice;
    let m = a.common.metric;
    let list = load_graph(a.graph.as_deref(), &spec)?;
    let trace = Evaluator::new(&spec, m).greedy_walk(&list.graph, a.start, a.query)?;
    let mut config = RunConfig::new("walk", &spec, m);
    config.graph_file = path_string(&a.graph);
    Ok(ok_if(to_json(&WalkReport::new(config, &spec, m, a.start, &trace)), true))
}

pub fn validate(a: &ValidateArgs) -> Result<Outcome> {
    let spec = a.common.lattice;
    let m = a.common.metric;
    let list = load_graph(a.graph.as_deref(), &spec)?;
    let failing = Evaluator::new(&spec, m).validate_reachability(&list.graph);
    let mut config = RunConfig::new("validate", &spec, m);
    config.graph_file = path_string(&a.graph);
    let report = ValidateReport {
        version: VERSION.to_string(),
        config,
        metric: m.name().to_string(),
        lattice: (&spec).into(),
        feasible: failing.is_empty(),
        failing_pairs: failing.iter().map(|&(s, t)| [s, t]).collect(),
        missing_base_edges: list.missing_base.iter().map(|e| [e.0, e.1]).collect(),
    };
    Ok(ok_if(to_json(&report), report.feasible))
}

pub fn execute(cli: &Cli) -> Result<(Outcome, Option<PathBuf>)> {
    let (out, common) = match &cli.command {
        Command::Evaluate(a) => (evaluate(a)?, &a.common),
        Command::Solve(a) => (solve(a)?, &a.common),
        Command::Walk(a) => (walk(a)?, &a.common),
        Command::Validate(a) => (validate(a)?, &a.common),
    };
    Ok((out, common.output.clone()))
}

/// Parse `args`, run, print; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok((out, path)) => {
            let written = match path {
                Some(p) => std::fs::write(&p, &out.json).with_context(|| format!("writing {}", p.display())),
                None => std::io::stdout().lock().write_all(out.json.as_bytes()).context("writing stdout"),
            };
            match written {
                Ok(()) => out.code,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    2
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}
