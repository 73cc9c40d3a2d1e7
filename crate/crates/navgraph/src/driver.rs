//! Thread-pool drivers. Results never depend on the worker count: exact
//! waves and heuristic restarts are collected in their serial order.

use navgraph_core::heuristic::{aggregate, run_restart};
use navgraph_core::{
    BranchAndBound, Budget, Error, Evaluator, HeuristicOptions, LatticeSpec, Metric, SolveResult,
};
use rayon::prelude::*;
use std::io::Write;
use std::time::{Duration, Instant};

/// Wall-clock budget; `None` never runs out.
#[derive(Debug, Clone, Copy)]
pub struct Deadline(Option<Instant>);

impl Deadline {
    pub fn after(limit: Option<Duration>) -> Self {
        Deadline(limit.map(|d| Instant::now() + d))
    }

    pub fn none() -> Self {
        Deadline(None)
    }
}

impl Budget for Deadline {
    fn exhausted(&self) -> bool {
        self.0.is_some_and(|t| Instant::now() >= t)
    }
}

pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, rayon::ThreadPoolBuildError> {
    rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()
}

/// Branch-and-bound with each wave's tasks spread over `workers` threads.
/// With `progress` a line per wave goes to stderr.
pub fn solve_exact(bb: &BranchAndBound, workers: usize, budget: &dyn Budget, progress: bool) -> SolveResult {
    let pool = thread_pool(workers).expect("thread pool");
    let n2 = (bb.evaluator().n() * bb.evaluator().n()) as f64;
    let started = Instant::now();
    let mut done = 0usize;
    let mut nodes = 0u64;
    let total_tasks = if progress { bb.tasks().0.len() } else { 0 };
    bb.solve_with(budget, |wave, incumbent| {
        let out: Vec<_> = pool.install(|| wave.par_iter().map(|p| bb.run_task(p, incumbent, budget)).collect());
        if progress {
            done += wave.len();
            nodes += out.iter().map(|o| o.stats().nodes_explored).sum::<u64>();
            let inc = incumbent.map_or("none".to_string(), |t| format!("{}", t as f64 / n2));
            let mut err = std::io::stderr().lock();
            let _ = writeln!(
                err,
                "exact: {done}/{total_tasks} tasks, {nodes} nodes, incumbent {inc}, {:.1}s",
                started.elapsed().as_secs_f64()
            );
        }
        out
    })
}

/// Local search with restarts spread over `workers` threads.
pub fn solve_heuristic(spec: &LatticeSpec, m: Metric, opts: &HeuristicOptions, workers: usize) -> Result<SolveResult, Error> {
    opts.validate()?;
    let eval = Evaluator::new(spec, m);
    let pool = thread_pool(workers).expect("thread pool");
    let outcomes: Vec<_> =
        pool.install(|| (0..opts.restarts).into_par_iter().map(|r| run_restart(&eval, opts, r)).collect());
    Ok(aggregate(&eval, &outcomes))
}
