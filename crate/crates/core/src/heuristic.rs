//! Local search over shortcut sets for lattices beyond exact reach.
//!
//! Each restart begins at the bare lattice, made feasible by a deterministic
//! repair pass when the metric needs it, and then runs either steepest
//! descent or simulated annealing over add / remove / swap moves.

use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::exact::{SolveResult, SolveStats};
use crate::graph::{candidate_pairs, Edge, EdgeMove, Graph};
use crate::lattice::{LatticeSpec, Metric};
use crate::walk::{Evaluator, IncrementalObjective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    SteepestDescent,
    SimulatedAnnealing,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::SteepestDescent => "steepest-descent",
            Strategy::SimulatedAnnealing => "simulated-annealing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicOptions {
    pub strategy: Strategy,
    pub restarts: usize,
    pub max_iterations: usize,
    pub initial_temperature: f64,
    pub cooling_rate: f64,
    pub seed: u64,
}

impl Default for HeuristicOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::SimulatedAnnealing,
            restarts: 16,
            max_iterations: 20_000,
            initial_temperature: 1.0,
            cooling_rate: 0.999,
            seed: 0,
        }
    }
}

impl HeuristicOptions {
    pub fn validate(&self) -> Result<(), Error> {
        if self.restarts == 0 {
            return Err(Error::InvalidOptions("restarts must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidOptions("max_iterations must be at least 1"));
        }
        if !(self.initial_temperature > 0.0 && self.initial_temperature.is_finite()) {
            return Err(Error::InvalidOptions("initial_temperature must be positive"));
        }
        if !(self.cooling_rate > 0.0 && self.cooling_rate < 1.0) {
            return Err(Error::InvalidOptions("cooling_rate must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// A compound move: one or two single-edge moves applied together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Move {
    Add(Edge),
    Remove(Edge),
    /// Remove the first, add the second.
    Swap(Edge, Edge),
}

impl Move {
    fn push(&self, inc: &mut IncrementalObjective<'_>) {
        let r = match *self {
            Move::Add(e) => inc.push(&EdgeMove::add(e.0, e.1)),
            Move::Remove(e) => inc.push(&EdgeMove::remove(e.0, e.1)),
            Move::Swap(out, inn) => inc
                .push(&EdgeMove::remove(out.0, out.1))
                .and_then(|_| inc.push(&EdgeMove::add(inn.0, inn.1))),
        };
        r.expect("moves are generated from the current graph");
    }
}

#[derive(Debug, Clone)]
pub struct RestartOutcome {
    pub restart: usize,
    pub total: Option<u64>,
    pub graph: Graph,
    pub iterations: u64,
    pub accepted: u64,
}

/// Add shortcuts until every pair is reachable. For the first failing pair,
/// the lowest candidate that makes that walk reach its target is added.
pub fn repair(eval: &Evaluator, graph: Graph) -> Graph {
    let cands = candidate_pairs(eval.spec());
    let mut inc = IncrementalObjective::new(eval, graph);
    loop {
        let Some(&(s, t)) = inc.value().failing_pairs().first() else {
            return inc.graph().clone();
        };
        let path = inc.value().path_mask(s, t);
        let g = inc.graph();
        let mut fix = None;
        for e in cands.iter().filter(|e| !g.has_edge(e.0, e.1)) {
            if path >> e.0 & 1 == 0 && path >> e.1 & 1 == 0 {
                continue;
            }
            let trial = g.apply_move(&EdgeMove::add(e.0, e.1)).expect("absent edge");
            if eval.pair_cost(&trial, s, t).expect("valid pair").is_some() {
                fix = Some(*e);
                break;
            }
        }
        // stalled vertex straight to the target always exists as a fallback
        let e = fix.unwrap_or_else(|| {
            let stuck = 63 - path.leading_zeros() as usize;
            let far = crate::graph::bits(path).find(|&v| !g.has_edge(v, t) && v != t).unwrap_or(stuck);
            Edge::new(far, t)
        });
        inc.push(&EdgeMove::add(e.0, e.1)).expect("absent edge");
        inc.commit();
    }
}

struct Pool {
    cands: Vec<Edge>,
    present: Vec<usize>,
    absent: Vec<usize>,
    slot: Vec<usize>,
}

impl Pool {
    fn new(cands: Vec<Edge>, g: &Graph) -> Self {
        let mut p = Pool { slot: alloc::vec![0; cands.len()], present: Vec::new(), absent: Vec::new(), cands };
        for i in 0..p.cands.len() {
            let e = p.cands[i];
            let list = if g.has_edge(e.0, e.1) { &mut p.present } else { &mut p.absent };
            p.slot[i] = list.len();
            list.push(i);
        }
        p
    }

    fn index(&self, e: Edge) -> usize {
        self.cands.binary_search(&e).expect("candidate edge")
    }

    fn flip(&mut self, e: Edge, now_present: bool) {
        let i = self.index(e);
        let (from, to) = if now_present { (&mut self.absent, &mut self.present) } else { (&mut self.present, &mut self.absent) };
        let s = self.slot[i];
        let last = *from.last().expect("non-empty list");
        from.swap_remove(s);
        if last != i {
            self.slot[last] = s;
        }
        self.slot[i] = to.len();
        to.push(i);
    }

    fn apply(&mut self, mv: Move) {
        match mv {
            Move::Add(e) => self.flip(e, true),
            Move::Remove(e) => self.flip(e, false),
            Move::Swap(out, inn) => {
                self.flip(out, false);
                self.flip(inn, true);
            }
        }
    }

    fn random_move(&self, rng: &mut ChaCha8Rng) -> Option<Move> {
        let mut kinds = [0u8; 3];
        let mut k = 0;
        if !self.absent.is_empty() {
            kinds[k] = 0;
            k += 1;
        }
        if !self.present.is_empty() {
            kinds[k] = 1;
            k += 1;
        }
        if !self.absent.is_empty() && !self.present.is_empty() {
            kinds[k] = 2;
            k += 1;
        }
        if k == 0 {
            return None;
        }
        let pick = |list: &Vec<usize>, rng: &mut ChaCha8Rng| self.cands[list[rng.random_range(0..list.len())]];
        Some(match kinds[rng.random_range(0..k)] {
            0 => Move::Add(pick(&self.absent, rng)),
            1 => Move::Remove(pick(&self.present, rng)),
            _ => {
                let out = pick(&self.present, rng);
                Move::Swap(out, pick(&self.absent, rng))
            }
        })
    }

    fn all_moves(&self) -> Vec<Move> {
        let mut present: Vec<Edge> = self.present.iter().map(|&i| self.cands[i]).collect();
        let mut absent: Vec<Edge> = self.absent.iter().map(|&i| self.cands[i]).collect();
        present.sort_unstable();
        absent.sort_unstable();
        let mut out: Vec<Move> = absent.iter().map(|&e| Move::Add(e)).collect();
        out.extend(present.iter().map(|&e| Move::Remove(e)));
        for &o in &present {
            out.extend(absent.iter().map(|&a| Move::Swap(o, a)));
        }
        out
    }
}

fn starting_graph(eval: &Evaluator, opts: &HeuristicOptions, restart: usize, rng: &mut ChaCha8Rng) -> Graph {
    let mut g = Graph::bare(eval.spec());
    // descent is deterministic, so later restarts start from a random kick
    if opts.strategy == Strategy::SteepestDescent && restart > 0 {
        let cands = candidate_pairs(eval.spec());
        let kicks = rng.random_range(1..=eval.n().max(2) / 2);
        for _ in 0..kicks {
            let e = cands[rng.random_range(0..cands.len())];
            g.set(e.0, e.1, true);
        }
    }
    if eval.objective(&g).is_feasible() {
        g
    } else {
        repair(eval, g)
    }
}

/// Best improving move, smallest first among equals. Returns the new total.
fn best_improvement(inc: &mut IncrementalObjective<'_>, pool: &Pool, current: u64) -> Option<(Move, u64)> {
    let mut best: Option<(Move, u64)> = None;
    for mv in pool.all_moves() {
        mv.push(inc);
        let total = inc.value().total_cost();
        inc.rollback();
        if let Some(t) = total {
            if t < best.map_or(current, |b| b.1) {
                best = Some((mv, t));
            }
        }
    }
    best
}

pub fn run_restart(eval: &Evaluator, opts: &HeuristicOptions, restart: usize) -> RestartOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(restart as u64);
    let start = starting_graph(eval, opts, restart, &mut rng);
    let mut pool = Pool::new(candidate_pairs(eval.spec()), &start);
    let mut inc = IncrementalObjective::new(eval, start);
    let mut current = inc.value().total_cost().expect("repaired graph is feasible");
    let mut best = (current, inc.graph().clone());
    let mut iterations = 0u64;
    let mut accepted = 0u64;
    let scale = (eval.n() * eval.n()) as f64;

    match opts.strategy {
        Strategy::SteepestDescent => {
            while (iterations as usize) < opts.max_iterations {
                iterations += 1;
                let Some((mv, total)) = best_improvement(&mut inc, &pool, current) else { break };
                mv.push(&mut inc);
                inc.commit();
                pool.apply(mv);
                current = total;
                accepted += 1;
            }
            best = (current, inc.graph().clone());
        }
        Strategy::SimulatedAnnealing => {
            let mut temperature = opts.initial_temperature;
            for _ in 0..opts.max_iterations {
                iterations += 1;
                let Some(mv) = pool.random_move(&mut rng) else { break };
                mv.push(&mut inc);
                let keep = match inc.value().total_cost() {
                    None => false,
                    Some(t) if t <= current => true,
                    Some(t) => {
                        let delta = (t - current) as f64 / scale;
                        rng.random::<f64>() < libm::exp(-delta / temperature)
                    }
                };
                if keep {
                    inc.commit();
                    pool.apply(mv);
                    current = inc.value().total_cost().expect("accepted moves are feasible");
                    accepted += 1;
                    if current < best.0 {
                        best = (current, inc.graph().clone());
                    }
                } else {
                    inc.rollback();
                }
                temperature *= opts.cooling_rate;
            }
        }
    }
    RestartOutcome { restart, total: Some(best.0), graph: best.1, iterations, accepted }
}

/// Minimum total, lowest restart index on ties.
pub fn aggregate(eval: &Evaluator, outcomes: &[RestartOutcome]) -> SolveResult {
    let mut stats = SolveStats::default();
    let mut winner: Option<&RestartOutcome> = None;
    for o in outcomes {
        stats.iterations += o.iterations;
        stats.accepted_moves += o.accepted;
        let better = match (winner, o.total) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some(w), Some(t)) => w.total.is_none_or(|wt| t < wt || (t == wt && o.restart < w.restart)),
        };
        if better {
            winner = Some(o);
        }
    }
    let sym = eval.symmetry();
    SolveResult {
        n: eval.n(),
        best_total: winner.and_then(|w| w.total),
        best_graphs: winner
            .map(|w| alloc::vec![(w.graph.canonical_key(sym), w.graph.canonical_form(sym))])
            .unwrap_or_default(),
        proof_of_optimality: false,
        stats,
    }
}

/// Serial local search over all restarts.
pub fn local_search(spec: &LatticeSpec, m: Metric, opts: &HeuristicOptions) -> Result<SolveResult, Error> {
    opts.validate()?;
    let eval = Evaluator::new(spec, m);
    let outcomes: Vec<RestartOutcome> = (0..opts.restarts).map(|r| run_restart(&eval, opts, r)).collect();
    Ok(aggregate(&eval, &outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::objective;

    fn sp(r: usize, c: usize) -> LatticeSpec {
        LatticeSpec::new(r, c).unwrap()
    }

    #[test]
    fn options_validation() {
        assert!(HeuristicOptions::default().validate().is_ok());
        let bad = [
            HeuristicOptions { restarts: 0, ..Default::default() },
            HeuristicOptions { max_iterations: 0, ..Default::default() },
            HeuristicOptions { cooling_rate: 1.0, ..Default::default() },
            HeuristicOptions { initial_temperature: 0.0, ..Default::default() },
        ];
        for o in bad {
            assert!(o.validate().is_err());
        }
    }

    #[test]
    fn descent_on_2x2() {
        for seed in [0, 1, 99] {
            let opts = HeuristicOptions { strategy: Strategy::SteepestDescent, seed, restarts: 3, ..Default::default() };
            let r = local_search(&sp(2, 2), Metric::L2, &opts).unwrap();
            assert_eq!(r.best_value(), Some(3.75));
            assert!(!r.proof_of_optimality);
        }
    }

    #[test]
    fn repair_makes_linf_feasible() {
        for (r, c) in [(2, 2), (3, 3), (4, 5), (6, 6)] {
            let eval = Evaluator::new(&sp(r, c), Metric::Linf);
            let g = repair(&eval, Graph::bare(&sp(r, c)));
            assert!(eval.validate_reachability(&g).is_empty());
        }
    }

    #[test]
    fn annealing_is_deterministic() {
        let opts = HeuristicOptions { restarts: 3, max_iterations: 2000, seed: 5, ..Default::default() };
        let a = local_search(&sp(3, 3), Metric::Linf, &opts).unwrap();
        let b = local_search(&sp(3, 3), Metric::Linf, &opts).unwrap();
        assert_eq!(a, b);
        let g = &a.best_graphs[0].1;
        assert_eq!(objective(g, Metric::Linf).total_cost(), a.best_total);
    }
}
