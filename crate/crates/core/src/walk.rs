//! The greedy walk, its operation count, and the averaged objective.
//!
//! A walk at vertex `s` evaluates the distance from every neighbor to the
//! query, moves to the closest one if it is strictly closer than `s`, and
//! stops otherwise. Its cost is the number of distinct vertices whose distance
//! was evaluated, start included.
//!
//! Ties between equidistant neighbors go to the vertex with the lowest index
//! in the graph's canonical frame (see [`Graph::canonical_frame`]). For graphs
//! already in canonical form, which includes every symmetric graph, that is
//! plain lowest index. Reading indices through the canonical frame makes the
//! objective a function of the symmetry orbit rather than of the labeling.

use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::graph::{bits, EdgeMove, Graph, MoveAction};
use crate::lattice::{LatticeSpec, Metric, Point, SymmetryGroup};

/// Operation count of one (start, target) walk; `None` when the walk stalls.
pub type PairCost = Option<u32>;

const INFEASIBLE: u32 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct WalkStep {
    pub vertex: usize,
    /// Distance from `vertex` to the query.
    pub distance: f64,
    /// Neighbors whose distance was evaluated at this step, ascending.
    pub examined: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkTrace {
    pub query: Point,
    pub target: usize,
    pub path: Vec<usize>,
    pub steps: Vec<WalkStep>,
    /// Vertices whose distance to the query was evaluated, ascending.
    pub computed_set: Vec<usize>,
    pub reached_target: bool,
    /// Group element whose labeling resolved ties.
    pub frame: usize,
}

impl WalkTrace {
    pub fn cost(&self) -> usize {
        self.computed_set.len()
    }
}

/// Per-pair costs of a whole graph plus the aggregate.
///
/// Costs and path masks are indexed `start * n + target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectiveValue {
    n: usize,
    frame: usize,
    costs: Vec<u32>,
    paths: Vec<u64>,
    total: u64,
    infeasible: usize,
}

impl ObjectiveValue {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn frame(&self) -> usize {
        self.frame
    }

    pub fn is_feasible(&self) -> bool {
        self.infeasible == 0
    }

    /// Sum of all pair costs, `None` when infeasible. The objective is this
    /// numerator over `n^2`.
    pub fn total_cost(&self) -> Option<u64> {
        self.is_feasible().then_some(self.total)
    }

    pub fn value(&self) -> Option<f64> {
        self.total_cost().map(|t| t as f64 / (self.n * self.n) as f64)
    }

    pub fn pair_cost(&self, start: usize, target: usize) -> PairCost {
        match self.costs[start * self.n + target] {
            INFEASIBLE => None,
            c => Some(c),
        }
    }

    /// Bitset of the vertices on the (start, target) walk.
    pub fn path_mask(&self, start: usize, target: usize) -> u64 {
        self.paths[start * self.n + target]
    }

    pub fn pair_costs(&self) -> Vec<Vec<PairCost>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.pair_cost(i, j)).collect()).collect()
    }

    pub fn failing_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        (0..n * n).filter(|&k| self.costs[k] == INFEASIBLE).map(|k| (k / n, k % n)).collect()
    }

    pub fn infeasible_count(&self) -> usize {
        self.infeasible
    }

    fn set(&mut self, k: usize, cost: u32, path: u64) {
        match self.costs[k] {
            INFEASIBLE => self.infeasible -= 1,
            c => self.total -= c as u64,
        }
        match cost {
            INFEASIBLE => self.infeasible += 1,
            c => self.total += c as u64,
        }
        self.costs[k] = cost;
        self.paths[k] = path;
    }
}

/// Precomputed distance keys and tie-break orders for one lattice and metric.
#[derive(Debug, Clone)]
pub struct Evaluator {
    spec: LatticeSpec,
    metric: Metric,
    sym: SymmetryGroup,
    keys: Vec<u32>,
    ranks: Vec<Vec<u8>>,
}

impl Evaluator {
    pub fn new(spec: &LatticeSpec, metric: Metric) -> Self {
        let n = spec.n();
        let mut keys = alloc::vec![0u32; n * n];
        for a in 0..n {
            for b in 0..n {
                let (ax, ay) = spec.grid(a);
                let (bx, by) = spec.grid(b);
                keys[a * n + b] = metric.rank_key_int(ax - bx, ay - by);
            }
        }
        let sym = spec.symmetry_group();
        let ranks = sym
            .permutations()
            .iter()
            .map(|p| p.iter().map(|&v| v as u8).collect())
            .collect();
        Self { spec: *spec, metric, sym, keys, ranks }
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn symmetry(&self) -> &SymmetryGroup {
        &self.sym
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    /// Exact comparison key between two vertices (squared for L2).
    #[inline]
    pub fn key(&self, a: usize, b: usize) -> u32 {
        self.keys[a * self.spec.n() + b]
    }

    pub(crate) fn rank(&self, frame: usize) -> &[u8] {
        &self.ranks[frame]
    }

    /// Walk towards the node `target` using integer keys.
    /// Returns the cost (`INFEASIBLE` when stalled) and the path bitset.
    #[inline]
    pub(crate) fn walk_to_node(&self, adj: &[u64], rank: &[u8], start: usize, target: usize) -> (u32, u64) {
        let n = self.spec.n();
        let tk = &self.keys[target * n..target * n + n];
        let mut s = start;
        let mut computed = 1u64 << s;
        let mut path = computed;
        loop {
            let nb = adj[s];
            computed |= nb;
            if s == target {
                return (computed.count_ones(), path);
            }
            let mut best = usize::MAX;
            let mut best_key = u32::MAX;
            for y in bits(nb) {
                let k = tk[y];
                if k < best_key || (k == best_key && rank[y] < rank[best]) {
                    best = y;
                    best_key = k;
                }
            }
            if best_key < tk[s] {
                s = best;
                path |= 1 << s;
            } else {
                return (INFEASIBLE, path);
            }
        }
    }

    pub fn pair_cost(&self, g: &Graph, start: usize, target: usize) -> Result<PairCost, Error> {
        self.spec.check_vertex(start)?;
        self.spec.check_vertex(target)?;
        let frame = g.canonical_frame(&self.sym);
        let (c, _) = self.walk_to_node(g.rows(), self.rank(frame), start, target);
        Ok((c != INFEASIBLE).then_some(c))
    }

    pub fn objective(&self, g: &Graph) -> ObjectiveValue {
        let frame = g.canonical_frame(&self.sym);
        self.objective_in_frame(g.rows(), frame)
    }

    pub(crate) fn objective_in_frame(&self, adj: &[u64], frame: usize) -> ObjectiveValue {
        let n = self.n();
        let rank = self.rank(frame);
        let mut costs = alloc::vec![0u32; n * n];
        let mut paths = alloc::vec![0u64; n * n];
        let mut total = 0u64;
        let mut infeasible = 0;
        for i in 0..n {
            for t in 0..n {
                let (c, p) = self.walk_to_node(adj, rank, i, t);
                costs[i * n + t] = c;
                paths[i * n + t] = p;
                if c == INFEASIBLE {
                    infeasible += 1;
                } else {
                    total += c as u64;
                }
            }
        }
        ObjectiveValue { n, frame, costs, paths, total, infeasible }
    }

    /// Objective of `g` after `mv`, recomputing only walks that pass through
    /// an endpoint of the moved edge. With `verify`, `cache` is first checked
    /// against a full recomputation on `g`.
    pub fn objective_delta(
        &self,
        g: &Graph,
        mv: &EdgeMove,
        cache: &ObjectiveValue,
        verify: bool,
    ) -> Result<ObjectiveValue, Error> {
        if cache.n != g.n() || cache.frame != g.canonical_frame(&self.sym) {
            return Err(Error::StaleCache);
        }
        if verify && self.objective(g) != *cache {
            return Err(Error::StaleCache);
        }
        let next = g.apply_move(mv)?;
        let mut out = cache.clone();
        self.refresh(&next, mv, &mut out, None);
        Ok(out)
    }

    /// Bring `value` (valid before `mv`) in line with `next`.
    fn refresh(&self, next: &Graph, mv: &EdgeMove, value: &mut ObjectiveValue, mut undo: Option<&mut Vec<(u32, u32, u64)>>) {
        let frame = next.canonical_frame(&self.sym);
        let n = self.n();
        let touched = (1u64 << mv.edge.0) | (1u64 << mv.edge.1);
        let full = frame != value.frame;
        value.frame = frame;
        let rank = self.rank(frame);
        for k in 0..n * n {
            if full || value.paths[k] & touched != 0 {
                let (c, p) = self.walk_to_node(next.rows(), rank, k / n, k % n);
                if c != value.costs[k] || p != value.paths[k] {
                    if let Some(log) = undo.as_deref_mut() {
                        log.push((k as u32, value.costs[k], value.paths[k]));
                    }
                    value.set(k, c, p);
                }
            }
        }
    }

    pub fn validate_reachability(&self, g: &Graph) -> Vec<(usize, usize)> {
        self.objective(g).failing_pairs()
    }

    /// Target of a planar query: the closest vertex, ties by frame rank.
    fn nearest_vertex(&self, query: Point, rank: &[u8]) -> usize {
        let mut best = 0;
        let mut best_key = f64::INFINITY;
        for v in 0..self.n() {
            let (x, y) = self.spec.grid(v);
            let k = self.metric.rank_key(x as f64 - query[0], y as f64 - query[1]);
            if k < best_key || (k == best_key && rank[v] < rank[best]) {
                best = v;
                best_key = k;
            }
        }
        best
    }

    /// Cost, reach flag and path bitset of a walk towards a planar query.
    fn walk_to_point(&self, adj: &[u64], rank: &[u8], start: usize, query: Point, target: usize) -> (u32, bool, u64) {
        let key = |v: usize| {
            let (x, y) = self.spec.grid(v);
            self.metric.rank_key(x as f64 - query[0], y as f64 - query[1])
        };
        let mut s = start;
        let mut computed = 1u64 << s;
        let mut path = computed;
        loop {
            computed |= adj[s];
            let mut best = usize::MAX;
            let mut best_key = f64::INFINITY;
            for y in bits(adj[s]) {
                let k = key(y);
                if k < best_key || (k == best_key && rank[y] < rank[best]) {
                    best = y;
                    best_key = k;
                }
            }
            if best_key < key(s) {
                s = best;
                path |= 1 << s;
            } else {
                return (computed.count_ones(), s == target, path);
            }
        }
    }

    pub fn greedy_walk(&self, g: &Graph, start: usize, query: Point) -> Result<WalkTrace, Error> {
        self.spec.check_vertex(start)?;
        let frame = g.canonical_frame(&self.sym);
        let rank = self.rank(frame);
        let target = self.nearest_vertex(query, rank);
        let key = |v: usize| {
            let (x, y) = self.spec.grid(v);
            self.metric.rank_key(x as f64 - query[0], y as f64 - query[1])
        };
        let dist = |v: usize| {
            let p = self.spec.node_coordinates(v).expect("vertex in range");
            self.metric.distance(&p, &query).expect("planar points")
        };
        let adj = g.rows();
        let mut s = start;
        let mut computed = 1u64 << s;
        let mut path = alloc::vec![s];
        let mut steps = Vec::new();
        loop {
            computed |= adj[s];
            steps.push(WalkStep { vertex: s, distance: dist(s), examined: bits(adj[s]).collect() });
            let mut best = usize::MAX;
            let mut best_key = f64::INFINITY;
            for y in bits(adj[s]) {
                let k = key(y);
                if k < best_key || (k == best_key && rank[y] < rank[best]) {
                    best = y;
                    best_key = k;
                }
            }
            if best_key < key(s) {
                s = best;
                path.push(s);
            } else {
                break;
            }
        }
        Ok(WalkTrace {
            query,
            target,
            reached_target: s == target,
            path,
            steps,
            computed_set: bits(computed).collect(),
            frame,
        })
    }

    pub fn monte_carlo(&self, g: &Graph, opts: &McOptions) -> Result<McEstimate, Error> {
        if opts.samples == 0 {
            return Err(Error::ZeroSamples);
        }
        let n = self.n();
        let rank = self.rank(g.canonical_frame(&self.sym));
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let (w, h) = (self.spec.cols() as f64, self.spec.rows() as f64);
        // Welford accumulation
        let mut mean = 0.0;
        let mut m2 = 0.0;
        let mut stalled = 0u64;
        for k in 0..opts.samples {
            let query = match opts.sampler {
                QuerySampler::NodeAtoms => {
                    let v = rng.random_range(0..n);
                    self.spec.node_coordinates(v).expect("sampled vertex")
                }
                QuerySampler::UniformCells => [rng.random::<f64>() * w - 0.5, rng.random::<f64>() * h - 0.5],
            };
            let target = self.nearest_vertex(query, rank);
            let x = if opts.sample_start {
                let s = rng.random_range(0..n);
                let (c, ok, _) = self.walk_to_point(g.rows(), rank, s, query, target);
                stalled += u64::from(!ok);
                c as f64
            } else {
                let mut sum = 0u64;
                for s in 0..n {
                    let (c, ok, _) = self.walk_to_point(g.rows(), rank, s, query, target);
                    stalled += u64::from(!ok);
                    sum += c as u64;
                }
                sum as f64 / n as f64
            };
            let count = (k + 1) as f64;
            let d = x - mean;
            mean += d / count;
            m2 += d * (x - mean);
        }
        let var = if opts.samples > 1 { m2 / (opts.samples - 1) as f64 } else { 0.0 };
        Ok(McEstimate {
            mean,
            std_error: libm::sqrt(var / opts.samples as f64),
            samples: opts.samples,
            stalled_walks: stalled,
        })
    }
}

/// Query densities for the continuous objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuerySampler {
    /// Uniform over the `n` node positions.
    NodeAtoms,
    /// Uniform over the union of the nodes' unit cells,
    /// `[-0.5, cols - 0.5) x [-0.5, rows - 0.5)`.
    UniformCells,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McOptions {
    pub sampler: QuerySampler,
    pub samples: u64,
    pub seed: u64,
    /// Draw one start per query instead of averaging over every start.
    pub sample_start: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    /// Walks that stopped before reaching the query's nearest vertex. They
    /// still contribute their operation count.
    pub stalled_walks: u64,
}

/// Objective maintained under a sequence of tentative moves.
#[derive(Debug, Clone)]
pub struct IncrementalObjective<'a> {
    eval: &'a Evaluator,
    graph: Graph,
    value: ObjectiveValue,
    undo: Vec<(u32, u32, u64)>,
    pending: Vec<(EdgeMove, usize)>,
}

impl<'a> IncrementalObjective<'a> {
    pub fn new(eval: &'a Evaluator, graph: Graph) -> Self {
        let value = eval.objective(&graph);
        Self { eval, graph, value, undo: Vec::new(), pending: Vec::new() }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn value(&self) -> &ObjectiveValue {
        &self.value
    }

    /// Apply a move tentatively; it stays until [`commit`](Self::commit) or
    /// [`rollback`](Self::rollback).
    pub fn push(&mut self, mv: &EdgeMove) -> Result<(), Error> {
        self.graph.check_move(mv)?;
        let frame = self.value.frame;
        let mark = self.undo.len();
        self.graph.set(mv.edge.0, mv.edge.1, mv.action == MoveAction::Add);
        self.eval.refresh(&self.graph, mv, &mut self.value, Some(&mut self.undo));
        // frame is restored separately on rollback
        self.pending.push((*mv, mark));
        self.undo.push((u32::MAX, frame as u32, 0));
        Ok(())
    }

    pub fn commit(&mut self) {
        self.undo.clear();
        self.pending.clear();
    }

    pub fn rollback(&mut self) {
        while let Some((mv, mark)) = self.pending.pop() {
            let inv = mv.inverse();
            self.graph.set(inv.edge.0, inv.edge.1, inv.action == MoveAction::Add);
            while self.undo.len() > mark {
                let (k, c, p) = self.undo.pop().expect("undo entry");
                if k == u32::MAX {
                    self.value.frame = c as usize;
                } else {
                    self.value.set(k as usize, c, p);
                }
            }
        }
    }
}

pub fn greedy_walk(g: &Graph, m: Metric, start: usize, query: Point) -> Result<WalkTrace, Error> {
    Evaluator::new(g.spec(), m).greedy_walk(g, start, query)
}

pub fn pair_cost(g: &Graph, m: Metric, start: usize, target: usize) -> Result<PairCost, Error> {
    Evaluator::new(g.spec(), m).pair_cost(g, start, target)
}

pub fn objective(g: &Graph, m: Metric) -> ObjectiveValue {
    Evaluator::new(g.spec(), m).objective(g)
}

/// Verified incremental re-evaluation; see [`Evaluator::objective_delta`].
pub fn objective_delta(g: &Graph, m: Metric, mv: &EdgeMove, cache: &ObjectiveValue) -> Result<ObjectiveValue, Error> {
    Evaluator::new(g.spec(), m).objective_delta(g, mv, cache, true)
}

pub fn validate_reachability(g: &Graph, m: Metric) -> Vec<(usize, usize)> {
    Evaluator::new(g.spec(), m).validate_reachability(g)
}

pub fn monte_carlo_objective(g: &Graph, m: Metric, opts: &McOptions) -> Result<McEstimate, Error> {
    Evaluator::new(g.spec(), m).monte_carlo(g, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn sp(r: usize, c: usize) -> LatticeSpec {
        LatticeSpec::new(r, c).unwrap()
    }

    #[test]
    fn path_walk() {
        let g = Graph::bare(&sp(1, 3));
        let t = greedy_walk(&g, Metric::L2, 0, [2.0, 0.0]).unwrap();
        assert_eq!(t.path, [0, 1, 2]);
        assert_eq!(t.computed_set, [0, 1, 2]);
        assert!(t.reached_target);
        assert_eq!(t.steps.len(), 3);
        assert_eq!(t.steps[0].distance, 2.0);
    }

    #[test]
    fn square_walks() {
        let g = Graph::bare(&sp(2, 2));
        let t = greedy_walk(&g, Metric::L2, 0, [1.0, 1.0]).unwrap();
        assert_eq!(t.path, [0, 1, 3]);
        assert_eq!(t.computed_set, [0, 1, 2, 3]);
        assert!(t.reached_target);
        let t = greedy_walk(&g, Metric::Linf, 0, [1.0, 1.0]).unwrap();
        assert_eq!(t.path, [0]);
        assert!(!t.reached_target);
        assert_eq!(t.target, 3);
        let t = greedy_walk(&g, Metric::L1, 2, [0.0, 1.0]).unwrap();
        assert_eq!(t.path, [2]);
        assert_eq!(t.cost(), 3);
    }

    #[test]
    fn pair_costs_2x2() {
        let g = Graph::bare(&sp(2, 2));
        assert_eq!(pair_cost(&g, Metric::L2, 0, 0).unwrap(), Some(3));
        assert_eq!(pair_cost(&g, Metric::L2, 0, 3).unwrap(), Some(4));
        assert_eq!(pair_cost(&g, Metric::Linf, 0, 3).unwrap(), None);
        assert!(pair_cost(&g, Metric::L2, 0, 9).is_err());
    }

    #[test]
    fn objectives_2x2() {
        let s = sp(2, 2);
        let bare = Graph::bare(&s);
        assert_eq!(objective(&bare, Metric::L2).value(), Some(3.75));
        assert_eq!(objective(&Graph::complete(&s), Metric::L2).value(), Some(4.0));
        assert_eq!(objective(&bare, Metric::Linf).value(), None);
        assert_eq!(objective(&Graph::new(&s, &[Edge(0, 3)]).unwrap(), Metric::L2).value(), Some(3.875));
    }

    #[test]
    fn reachability_2x2() {
        let s = sp(2, 2);
        let bare = Graph::bare(&s);
        assert!(validate_reachability(&bare, Metric::L1).is_empty());
        assert_eq!(validate_reachability(&bare, Metric::Linf), [(0, 3), (1, 2), (2, 1), (3, 0)]);
        for m in Metric::ALL {
            assert!(validate_reachability(&Graph::complete(&s), m).is_empty());
        }
    }

    #[test]
    fn deltas_2x2() {
        let s = sp(2, 2);
        let bare = Graph::bare(&s);
        let c = objective(&bare, Metric::L2);
        let d = objective_delta(&bare, Metric::L2, &EdgeMove::add(0, 3), &c).unwrap();
        assert_eq!(d.value(), Some(3.875));
        let diag = bare.apply_move(&EdgeMove::add(0, 3)).unwrap();
        let back = objective_delta(&diag, Metric::L2, &EdgeMove::remove(0, 3), &d).unwrap();
        assert_eq!(back, c);

        let c = objective(&bare, Metric::Linf);
        let d = objective_delta(&diag, Metric::Linf, &EdgeMove::add(1, 2), &objective(&diag, Metric::Linf)).unwrap();
        assert!(!c.is_feasible());
        assert_eq!(d.value(), Some(4.0));
        assert_eq!(
            objective_delta(&diag, Metric::L2, &EdgeMove::add(1, 2), &objective(&bare, Metric::L2)),
            Err(Error::StaleCache)
        );
    }

    #[test]
    fn incremental_rollback_restores() {
        let s = sp(3, 3);
        let eval = Evaluator::new(&s, Metric::L1);
        let mut inc = IncrementalObjective::new(&eval, Graph::bare(&s));
        let before = inc.value().clone();
        inc.push(&EdgeMove::add(0, 8)).unwrap();
        inc.push(&EdgeMove::add(2, 4)).unwrap();
        assert_eq!(*inc.value(), eval.objective(inc.graph()));
        inc.rollback();
        assert_eq!(*inc.value(), before);
        assert_eq!(*inc.graph(), Graph::bare(&s));
        inc.push(&EdgeMove::add(1, 5)).unwrap();
        inc.commit();
        assert_eq!(*inc.value(), eval.objective(inc.graph()));
    }

    #[test]
    fn monte_carlo_basics() {
        let g = Graph::bare(&sp(2, 2));
        let opts = McOptions { sampler: QuerySampler::NodeAtoms, samples: 2000, seed: 3, sample_start: true };
        let a = monte_carlo_objective(&g, Metric::L2, &opts).unwrap();
        let b = monte_carlo_objective(&g, Metric::L2, &opts).unwrap();
        assert_eq!(a, b);
        assert!((a.mean - 3.75).abs() <= 4.0 * a.std_error + 1e-12);
        let zero = McOptions { samples: 0, ..opts };
        assert_eq!(monte_carlo_objective(&g, Metric::L2, &zero), Err(Error::ZeroSamples));
        let cells = McOptions { sampler: QuerySampler::UniformCells, ..opts };
        let c = monte_carlo_objective(&g, Metric::L2, &cells).unwrap();
        assert!(c.mean >= 3.0 && c.mean <= 4.0);
    }

    #[test]
    fn point_walk_agrees_with_node_walk() {
        let s = sp(3, 4);
        let eval = Evaluator::new(&s, Metric::L2);
        let g = Graph::new(&s, &[Edge(0, 11), Edge(1, 6), Edge(3, 8)]).unwrap();
        let obj = eval.objective(&g);
        for i in 0..s.n() {
            for t in 0..s.n() {
                let tr = eval.greedy_walk(&g, i, s.node_coordinates(t).unwrap()).unwrap();
                assert_eq!(tr.target, t);
                assert_eq!(obj.pair_cost(i, t), tr.reached_target.then_some(tr.cost() as u32));
            }
        }
    }
}
