//! Provably optimal shortcut sets: exhaustive enumeration and branch-and-bound.
//!
//! Candidates are branched on in ascending pair order, which is also the bit
//! order of [`CanonicalKey`]. Symmetry pruning keeps only partial assignments
//! whose shortcut relation can still be the lexicographic minimum of its
//! orbit, so every leaf that survives is in canonical form and its ties are
//! broken by plain vertex index.
//!
//! Before branching, a candidate is fixed to present when some walk cannot
//! leave its start without it (see [`lower_bound_with`]).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::Error;
use crate::graph::{bits, candidate_pairs, CanonicalKey, Edge, Graph};
use crate::lattice::{LatticeSpec, Metric};
use crate::walk::Evaluator;

/// Largest candidate set [`brute_force`] will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 25;

const NODES_PER_BUDGET_CHECK: u64 = 1024;
const UNBOUNDED: u32 = u32::MAX;

/// Stop signal polled during long searches.
pub trait Budget: Sync {
    fn exhausted(&self) -> bool;
}

/// A budget that never runs out.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoBudget;

impl Budget for NoBudget {
    fn exhausted(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveStats {
    pub nodes_explored: u64,
    pub pruned_by_bound: u64,
    pub pruned_by_symmetry: u64,
    pub leaves_evaluated: u64,
    pub tasks: u64,
    /// Local-search iterations and accepted moves; zero for exact solvers.
    pub iterations: u64,
    pub accepted_moves: u64,
}

impl SolveStats {
    fn absorb(&mut self, o: &SolveStats) {
        self.nodes_explored += o.nodes_explored;
        self.pruned_by_bound += o.pruned_by_bound;
        self.pruned_by_symmetry += o.pruned_by_symmetry;
        self.leaves_evaluated += o.leaves_evaluated;
        self.tasks += o.tasks;
        self.iterations += o.iterations;
        self.accepted_moves += o.accepted_moves;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub n: usize,
    /// Sum of all pair costs of the optimum; the value is this over `n^2`.
    pub best_total: Option<u64>,
    /// Optimal graphs in canonical form, one per symmetry orbit, ascending by key.
    pub best_graphs: Vec<(CanonicalKey, Graph)>,
    pub proof_of_optimality: bool,
    pub stats: SolveStats,
}

impl SolveResult {
    pub fn best_value(&self) -> Option<f64> {
        self.best_total.map(|t| t as f64 / (self.n * self.n) as f64)
    }

    pub fn keys(&self) -> Vec<CanonicalKey> {
        self.best_graphs.iter().map(|(k, _)| k.clone()).collect()
    }
}

/// Keeps the best total seen and one canonical graph per optimal orbit.
#[derive(Debug, Clone, Default)]
struct Incumbent {
    total: Option<u64>,
    graphs: BTreeMap<CanonicalKey, Graph>,
}

impl Incumbent {
    fn offer(&mut self, total: u64, key: CanonicalKey, graph: Graph) {
        match self.total {
            Some(t) if total > t => return,
            Some(t) if total == t => {}
            _ => {
                self.total = Some(total);
                self.graphs.clear();
            }
        }
        self.graphs.entry(key).or_insert(graph);
    }

    fn merge(&mut self, other: Incumbent) {
        if let Some(t) = other.total {
            for (k, g) in other.graphs {
                self.offer(t, k, g);
            }
        }
    }
}

fn resolve_candidates(spec: &LatticeSpec, candidates: Option<&[Edge]>) -> Result<Vec<Edge>, Error> {
    let all = candidate_pairs(spec);
    let Some(cands) = candidates else {
        return Ok(all);
    };
    let mut out = Vec::with_capacity(cands.len());
    for e in cands {
        spec.check_vertex(e.0)?;
        spec.check_vertex(e.1)?;
        if e.0 == e.1 {
            return Err(Error::SelfLoop(e.0));
        }
        let e = Edge::new(e.0, e.1);
        if all.binary_search(&e).is_ok() {
            out.push(e);
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Evaluate every subset of `candidates` (default: every non-base pair).
pub fn brute_force(spec: &LatticeSpec, m: Metric, candidates: Option<&[Edge]>) -> Result<SolveResult, Error> {
    let cands = resolve_candidates(spec, candidates)?;
    if cands.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManyCandidates { count: cands.len(), limit: BRUTE_FORCE_LIMIT });
    }
    let eval = Evaluator::new(spec, m);
    let mut g = Graph::bare(spec);
    let mut inc = Incumbent::default();
    let mut stats = SolveStats::default();
    // Gray-code order: one toggle per step
    for step in 0u64..1 << cands.len() {
        if step > 0 {
            let e = cands[step.trailing_zeros() as usize];
            let on = !g.has_edge(e.0, e.1);
            g.set(e.0, e.1, on);
        }
        stats.nodes_explored += 1;
        stats.leaves_evaluated += 1;
        if let Some(total) = eval.objective(&g).total_cost() {
            if inc.total.is_none_or(|t| total <= t) {
                let form = g.canonical_form(eval.symmetry());
                let key = g.canonical_key(eval.symmetry());
                inc.offer(total, key, form);
            }
        }
    }
    Ok(SolveResult {
        n: spec.n(),
        best_total: inc.total,
        best_graphs: inc.graphs.into_iter().collect(),
        proof_of_optimality: true,
        stats,
    })
}

/// Candidate pairs split into decided-in, decided-out and undecided.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PartialAssignment {
    pub decided_in: Vec<Edge>,
    pub decided_out: Vec<Edge>,
    pub undecided: Vec<Edge>,
}

impl PartialAssignment {
    /// Assignment over `candidates` with the first `decisions.len()` decided.
    pub fn from_prefix(candidates: &[Edge], decisions: &[bool]) -> Self {
        let mut p = Self::default();
        for (i, e) in candidates.iter().enumerate() {
            match decisions.get(i) {
                Some(true) => p.decided_in.push(*e),
                Some(false) => p.decided_out.push(*e),
                None => p.undecided.push(*e),
            }
        }
        p
    }

    fn known_rows(&self, spec: &LatticeSpec) -> Vec<u64> {
        let mut rows = Graph::bare(spec).rows().to_vec();
        for e in &self.decided_in {
            rows[e.0] |= 1 << e.1;
            rows[e.1] |= 1 << e.0;
        }
        rows
    }

    fn open_rows(&self, n: usize) -> Vec<u64> {
        let mut rows = alloc::vec![0u64; n];
        for e in &self.undecided {
            rows[e.0] |= 1 << e.1;
            rows[e.1] |= 1 << e.0;
        }
        rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundKind {
    /// Per pair `max(deg(start), deg(target)) + 1` over known edges.
    Degree,
    /// Simulates each walk as far as the known edges determine it.
    #[default]
    Walk,
}

fn degree_total(known: &[u64]) -> u64 {
    let deg: Vec<u64> = known.iter().map(|r| r.count_ones() as u64).collect();
    let mut total = 0;
    for &a in &deg {
        for &b in &deg {
            total += a.max(b) + 1;
        }
    }
    total
}

/// Degree lower bound on the objective of every completion of `partial`.
pub fn lower_bound(partial: &PartialAssignment, spec: &LatticeSpec, _m: Metric) -> f64 {
    let n = spec.n();
    degree_total(&partial.known_rows(spec)) as f64 / (n * n) as f64
}

/// Pairs every feasible graph contains: from some start no known neighbour
/// is strictly closer to some target and exactly one open pair is.
fn forced_rows(eval: &Evaluator, known: &[u64], open: &[u64]) -> Vec<u64> {
    let n = eval.n();
    let mut forced = alloc::vec![0u64; n];
    for s in 0..n {
        for t in (0..n).filter(|&t| t != s) {
            let ks = eval.key(s, t);
            if bits(known[s]).any(|y| eval.key(y, t) < ks) {
                continue;
            }
            let mut closer = bits(open[s]).filter(|&y| eval.key(y, t) < ks);
            if let (Some(w), None) = (closer.next(), closer.next()) {
                forced[s] |= 1 << w;
                forced[w] |= 1 << s;
            }
        }
    }
    forced
}

/// Lower bound of the given kind, valid for every completion whatever its
/// canonical frame. `INFINITY` means no completion is feasible.
///
/// Pairs forced by the whole candidate set count as known, as they do in
/// the search.
pub fn lower_bound_with(kind: BoundKind, partial: &PartialAssignment, eval: &Evaluator) -> f64 {
    let spec = eval.spec();
    let n = spec.n();
    let mut universe = alloc::vec![0u64; n];
    for e in partial.decided_in.iter().chain(&partial.decided_out).chain(&partial.undecided) {
        universe[e.0] |= 1 << e.1;
        universe[e.1] |= 1 << e.0;
    }
    let forced = forced_rows(eval, Graph::bare(spec).rows(), &universe);
    if partial.decided_out.iter().any(|e| forced[e.0] >> e.1 & 1 == 1) {
        return f64::INFINITY;
    }
    let mut known = partial.known_rows(spec);
    for (k, f) in known.iter_mut().zip(&forced) {
        *k |= f;
    }
    let total = match kind {
        BoundKind::Degree => Some(degree_total(&known)),
        BoundKind::Walk => {
            let mut open = partial.open_rows(n);
            for (o, f) in open.iter_mut().zip(&forced) {
                *o &= !f;
            }
            (0..eval.symmetry().len())
                .map(|f| WalkBound::new(eval, f, &known, &open).total())
                .min()
                .flatten()
        }
    };
    total.map_or(f64::INFINITY, |t| t as f64 / (n * n) as f64)
}

/// Bound on one (start, target) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PairBound {
    val: u32,
    /// Bound if no open pair at `start` is included.
    closed: u32,
    /// Vertices every feasible completion's walk computes.
    cover: u64,
    /// Vertices whose rows were read.
    deps: u64,
}

/// Follows the walk while known edges determine it. With `closed` the open
/// pairs at the start are treated as excluded.
#[inline]
fn walk_prefix(
    eval: &Evaluator,
    rank: &[u8],
    known: &[u64],
    open: &[u64],
    start: usize,
    target: usize,
    closed: bool,
    deps: &mut u64,
) -> (Option<u32>, u64, bool) {
    let mut s = start;
    let mut computed = 1u64 << s;
    loop {
        computed |= known[s];
        *deps |= 1 << s;
        if s == target {
            return (Some(computed.count_ones()), computed, false);
        }
        let open_s = if closed && s == start { 0 } else { open[s] };
        let ks = eval.key(s, target);
        let mut best = usize::MAX;
        let mut best_key = u32::MAX;
        for y in bits(known[s]) {
            let k = eval.key(y, target);
            if k < best_key || (k == best_key && rank[y] < rank[best]) {
                best = y;
                best_key = k;
            }
        }
        if best_key < ks {
            let threat = bits(open_s).any(|u| {
                let k = eval.key(u, target);
                k < best_key || (k == best_key && rank[u] < rank[best])
            });
            if threat {
                break;
            }
            s = best;
        } else if bits(open_s).any(|u| eval.key(u, target) < ks) {
            break;
        } else {
            return (None, 0, false);
        }
    }
    let cover = computed | known[target] | 1 << target;
    (Some(cover.count_ones()), cover, s == start)
}

#[inline]
fn pair_bound(eval: &Evaluator, rank: &[u8], known: &[u64], open: &[u64], start: usize, target: usize) -> PairBound {
    let mut deps = 1u64 << start | 1u64 << target;
    let (val, cover, at_start) = walk_prefix(eval, rank, known, open, start, target, false, &mut deps);
    let closed = if at_start {
        walk_prefix(eval, rank, known, open, start, target, true, &mut deps).0
    } else {
        val
    };
    PairBound { val: val.unwrap_or(UNBOUNDED), closed: closed.unwrap_or(UNBOUNDED), cover, deps }
}

/// Largest number of covers containing one vertex of `cols`, counted with
/// bit-sliced adders.
fn max_column_count(row: &[PairBound], cols: u64) -> u32 {
    let mut planes = [0u64; 7];
    for p in row {
        let mut carry = p.cover & cols;
        for plane in planes.iter_mut() {
            if carry == 0 {
                break;
            }
            let c = *plane & carry;
            *plane ^= carry;
            carry = c;
        }
    }
    let mut live = cols;
    let mut best = 0;
    for (b, plane) in planes.iter().enumerate().rev() {
        let hit = live & plane;
        if hit != 0 {
            live = hit;
            best |= 1 << b;
        }
    }
    best
}

/// Walk bounds of every pair under one tie-break frame, kept incrementally.
///
/// Per start vertex `i` the pair bounds are raised by `extra[i]`: either no
/// open pair at `i` is included, and every walk from `i` takes its known
/// first step, or some open `u` joins `N(i)` and adds one to every pair from
/// `i` whose cover misses `u`.
#[derive(Debug, Clone)]
struct WalkBound {
    frame: usize,
    pairs: Vec<PairBound>,
    extra: Vec<u32>,
    total: u64,
    unbounded: u32,
}

impl WalkBound {
    fn new(eval: &Evaluator, frame: usize, known: &[u64], open: &[u64]) -> Self {
        let n = eval.n();
        let rank = eval.rank(frame);
        let empty = PairBound { val: 0, closed: 0, cover: 0, deps: 0 };
        let mut b = WalkBound {
            frame,
            pairs: alloc::vec![empty; n * n],
            extra: alloc::vec![0; n],
            total: 0,
            unbounded: 0,
        };
        for k in 0..n * n {
            b.put(k, pair_bound(eval, rank, known, open, k / n, k % n));
        }
        for i in 0..n {
            let e = b.start_extra(n, i, open[i]);
            b.set_extra(i, e);
        }
        b
    }

    fn put(&mut self, k: usize, p: PairBound) {
        match p.val {
            UNBOUNDED => self.unbounded += 1,
            v => self.total += v as u64,
        }
        self.pairs[k] = p;
    }

    fn take(&mut self, k: usize) {
        match self.pairs[k].val {
            UNBOUNDED => self.unbounded -= 1,
            v => self.total -= v as u64,
        }
    }

    fn set_extra(&mut self, i: usize, e: u32) {
        self.total = self.total - self.extra[i] as u64 + e as u64;
        self.extra[i] = e;
    }

    fn start_extra(&self, n: usize, i: usize, open_i: u64) -> u32 {
        if open_i == 0 {
            return 0;
        }
        let row = &self.pairs[i * n..(i + 1) * n];
        let mut gain = 0u32;
        for p in row {
            if p.val == UNBOUNDED {
                return 0;
            }
            if p.closed == UNBOUNDED {
                gain = u32::MAX;
                break;
            }
            gain += p.closed - p.val;
        }
        if gain == 0 {
            return 0;
        }
        gain.min(n as u32 - max_column_count(row, open_i))
    }

    fn total(&self) -> Option<u64> {
        (self.unbounded == 0).then_some(self.total)
    }
}

/// Incremental lex-leader test against one group element.
#[derive(Debug, Clone)]
struct LexCheck {
    /// `pre[p]`: position of the preimage of candidate `p`.
    pre: Vec<u32>,
    next: u32,
    resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BranchOptions {
    pub symmetry_pruning: bool,
    /// Replaces the default incumbent (bare lattice, else all candidates).
    pub initial_incumbent: Option<Graph>,
    pub bound: BoundKind,
    /// Restrict branching to these pairs (default: every non-base pair).
    pub candidates: Option<Vec<Edge>>,
    /// Decisions fixed per independent subtree task.
    pub split_depth: usize,
    /// Tasks launched per incumbent synchronization.
    pub wave_size: usize,
}

impl BranchOptions {
    pub fn new() -> Self {
        Self {
            symmetry_pruning: true,
            initial_incumbent: None,
            bound: BoundKind::Walk,
            candidates: None,
            split_depth: 10,
            wave_size: 16,
        }
    }
}

/// Outcome of one subtree task.
#[derive(Debug, Clone, Default)]
pub struct TaskOutcome {
    incumbent: Incumbent,
    stats: SolveStats,
    completed: bool,
}

impl TaskOutcome {
    pub fn stats(&self) -> &SolveStats {
        &self.stats
    }

    pub fn completed(&self) -> bool {
        self.completed
    }
}

/// One search node: decisions over the candidate prefix and the bound
/// total used to prune it (`None`: no feasible completion).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceNode {
    pub decisions: Vec<bool>,
    pub bound: Option<u64>,
}

/// A prepared branch-and-bound instance.
///
/// The tree is cut at `split_depth` into subtree tasks that run in fixed
/// waves; each wave sees the incumbent merged from all previous waves. The
/// result is therefore identical however the tasks of a wave are scheduled.
#[derive(Debug, Clone)]
pub struct BranchAndBound {
    eval: Evaluator,
    cands: Vec<Edge>,
    /// Candidates present in every feasible graph; their exclude branch is skipped.
    forced: Vec<bool>,
    lex: Vec<LexCheck>,
    frames: Vec<usize>,
    bound: BoundKind,
    initial: Incumbent,
    split_depth: usize,
    wave_size: usize,
}

impl BranchAndBound {
    pub fn new(spec: &LatticeSpec, m: Metric, options: &BranchOptions) -> Result<Self, Error> {
        let eval = Evaluator::new(spec, m);
        let cands = resolve_candidates(spec, options.candidates.as_deref())?;
        let sym = eval.symmetry();
        let position: BTreeMap<Edge, u32> = cands.iter().enumerate().map(|(i, e)| (*e, i as u32)).collect();

        let mut lex = Vec::new();
        let mut stabilizer_is_group = true;
        if options.symmetry_pruning {
            for perm in sym.permutations().iter().skip(1) {
                let mut inv = alloc::vec![0; perm.len()];
                for (v, &img) in perm.iter().enumerate() {
                    inv[img] = v;
                }
                let pre: Option<Vec<u32>> = cands.iter().map(|e| position.get(&e.map(&inv)).copied()).collect();
                match pre {
                    Some(pre) if pre.iter().enumerate().any(|(i, &p)| p != i as u32) => {
                        lex.push(LexCheck { pre, next: 0, resolved: false })
                    }
                    Some(_) => {}
                    None => stabilizer_is_group = false,
                }
            }
        }
        // Surviving leaves are canonical only when the whole group prunes.
        let frames: Vec<usize> = if options.symmetry_pruning && stabilizer_is_group {
            alloc::vec![0]
        } else {
            let mut distinct: Vec<usize> = Vec::new();
            for f in 0..sym.len() {
                if !distinct.iter().any(|&d| sym.get(d) == sym.get(f)) {
                    distinct.push(f);
                }
            }
            distinct
        };

        let seed = match &options.initial_incumbent {
            Some(g) => g.clone(),
            None => {
                let bare = Graph::bare(spec);
                if eval.objective(&bare).is_feasible() {
                    bare
                } else {
                    let mut full = bare;
                    for e in &cands {
                        full.set(e.0, e.1, true);
                    }
                    full
                }
            }
        };
        let mut initial = Incumbent::default();
        if let Some(t) = eval.objective(&seed).total_cost() {
            initial.offer(t, seed.canonical_key(sym), seed.canonical_form(sym));
        }
        let mut open = alloc::vec![0u64; spec.n()];
        for e in &cands {
            open[e.0] |= 1 << e.1;
            open[e.1] |= 1 << e.0;
        }
        let rows = forced_rows(&eval, Graph::bare(spec).rows(), &open);
        let forced = cands.iter().map(|e| rows[e.0] >> e.1 & 1 == 1).collect();
        Ok(Self {
            cands,
            forced,
            lex,
            frames,
            bound: options.bound,
            initial,
            split_depth: options.split_depth,
            wave_size: options.wave_size.max(1),
            eval,
        })
    }

    pub fn candidates(&self) -> &[Edge] {
        &self.cands
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.eval
    }

    pub fn initial_total(&self) -> Option<u64> {
        self.initial.total
    }

    fn search(&self, incumbent: Option<u64>) -> Search<'_> {
        Search::new(self, incumbent)
    }

    /// Surviving subtree roots at the split depth, in search order.
    pub fn tasks(&self) -> (Vec<Vec<bool>>, SolveStats) {
        let depth = self.split_depth.min(self.cands.len());
        let mut s = self.search(self.initial.total);
        let mut out = Vec::new();
        s.collect_prefixes(depth, &mut Vec::new(), &mut out);
        (out, s.stats)
    }

    /// Explore one subtree against a fixed incumbent total.
    pub fn run_task(&self, prefix: &[bool], incumbent: Option<u64>, budget: &dyn Budget) -> TaskOutcome {
        let mut s = self.search(incumbent);
        for &d in prefix {
            s.decide(d);
        }
        s.dfs(budget);
        TaskOutcome {
            completed: !s.stopped,
            stats: SolveStats { tasks: 1, ..s.stats },
            incumbent: s.found,
        }
    }

    /// Run all tasks wave by wave. `run_wave` maps a wave of prefixes to
    /// outcomes in the same order; it may execute them concurrently.
    pub fn solve_with<F>(&self, budget: &dyn Budget, mut run_wave: F) -> SolveResult
    where
        F: FnMut(&[Vec<bool>], Option<u64>) -> Vec<TaskOutcome>,
    {
        let (tasks, mut stats) = self.tasks();
        let mut inc = self.initial.clone();
        let mut complete = true;
        for wave in tasks.chunks(self.wave_size) {
            if budget.exhausted() {
                complete = false;
                break;
            }
            for out in run_wave(wave, inc.total) {
                stats.absorb(&out.stats);
                complete &= out.completed;
                inc.merge(out.incumbent);
            }
        }
        SolveResult {
            n: self.eval.n(),
            best_total: inc.total,
            best_graphs: inc.graphs.into_iter().collect(),
            proof_of_optimality: complete,
            stats,
        }
    }

    /// Serial solve without task splitting that also records, for every
    /// node that reached the bound test, its decisions and bound total.
    pub fn solve_traced(&self) -> (SolveResult, Vec<TraceNode>) {
        let mut s = self.search(self.initial.total);
        s.trace = Some(Vec::new());
        s.dfs(&NoBudget);
        let mut inc = self.initial.clone();
        inc.merge(s.found);
        let result = SolveResult {
            n: self.eval.n(),
            best_total: inc.total,
            best_graphs: inc.graphs.into_iter().collect(),
            proof_of_optimality: true,
            stats: s.stats,
        };
        (result, s.trace.unwrap_or_default())
    }

    pub fn solve(&self, budget: &dyn Budget) -> SolveResult {
        self.solve_with(budget, |wave, inc| wave.iter().map(|p| self.run_task(p, inc, budget)).collect())
    }
}

/// Serial branch-and-bound.
pub fn branch_and_bound(
    spec: &LatticeSpec,
    m: Metric,
    options: &BranchOptions,
    budget: &dyn Budget,
) -> Result<SolveResult, Error> {
    Ok(BranchAndBound::new(spec, m, options)?.solve(budget))
}

#[derive(Debug, Clone, Copy)]
enum Undo {
    Pair { state: u8, pair: u32, old: PairBound },
    Extra { state: u8, start: u8, old: u32 },
    Lex { check: u8, next: u32, resolved: bool },
}

struct Search<'a> {
    bb: &'a BranchAndBound,
    known: Vec<u64>,
    open: Vec<u64>,
    decided: Vec<bool>,
    depth: usize,
    bounds: Vec<WalkBound>,
    lex: Vec<LexCheck>,
    log: Vec<Undo>,
    incumbent: Option<u64>,
    found: Incumbent,
    stats: SolveStats,
    stopped: bool,
    trace: Option<Vec<TraceNode>>,
}

impl<'a> Search<'a> {
    fn new(bb: &'a BranchAndBound, incumbent: Option<u64>) -> Self {
        let spec = bb.eval.spec();
        let n = spec.n();
        let mut known = Graph::bare(spec).rows().to_vec();
        let mut open = alloc::vec![0u64; n];
        for (e, &f) in bb.cands.iter().zip(&bb.forced) {
            let row = if f { &mut known } else { &mut open };
            row[e.0] |= 1 << e.1;
            row[e.1] |= 1 << e.0;
        }
        let bounds = match bb.bound {
            BoundKind::Walk => bb.frames.iter().map(|&f| WalkBound::new(&bb.eval, f, &known, &open)).collect(),
            BoundKind::Degree => Vec::new(),
        };
        Self {
            bb,
            known,
            open,
            decided: Vec::with_capacity(bb.cands.len()),
            depth: 0,
            bounds,
            lex: bb.lex.clone(),
            log: Vec::new(),
            incumbent,
            found: Incumbent::default(),
            stats: SolveStats::default(),
            stopped: false,
            trace: None,
        }
    }

    fn decide(&mut self, include: bool) {
        let e = self.bb.cands[self.depth];
        self.open[e.0] &= !(1 << e.1);
        self.open[e.1] &= !(1 << e.0);
        if include {
            self.known[e.0] |= 1 << e.1;
            self.known[e.1] |= 1 << e.0;
        }
        self.decided.push(include);
        self.depth += 1;
        let touched = (1u64 << e.0) | (1u64 << e.1);
        let n = self.bb.eval.n();
        for (si, b) in self.bounds.iter_mut().enumerate() {
            let rank = self.bb.eval.rank(b.frame);
            let mut starts = touched;
            for k in 0..n * n {
                if b.pairs[k].deps & touched != 0 {
                    let p = pair_bound(&self.bb.eval, rank, &self.known, &self.open, k / n, k % n);
                    if p != b.pairs[k] {
                        self.log.push(Undo::Pair { state: si as u8, pair: k as u32, old: b.pairs[k] });
                        b.take(k);
                        b.put(k, p);
                        starts |= 1 << (k / n);
                    }
                }
            }
            for i in bits(starts) {
                let x = b.start_extra(n, i, self.open[i]);
                if x != b.extra[i] {
                    self.log.push(Undo::Extra { state: si as u8, start: i as u8, old: b.extra[i] });
                    b.set_extra(i, x);
                }
            }
        }
    }

    fn undecide(&mut self, mark: usize) {
        while self.log.len() > mark {
            match self.log.pop().expect("undo entry") {
                Undo::Pair { state, pair, old } => {
                    let b = &mut self.bounds[state as usize];
                    b.take(pair as usize);
                    b.put(pair as usize, old);
                }
                Undo::Extra { state, start, old } => self.bounds[state as usize].set_extra(start as usize, old),
                Undo::Lex { check, next, resolved } => {
                    let c = &mut self.lex[check as usize];
                    c.next = next;
                    c.resolved = resolved;
                }
            }
        }
        self.depth -= 1;
        let include = self.decided.pop().expect("decision");
        if self.bb.forced[self.depth] {
            return;
        }
        let e = self.bb.cands[self.depth];
        self.open[e.0] |= 1 << e.1;
        self.open[e.1] |= 1 << e.0;
        if include {
            self.known[e.0] &= !(1 << e.1);
            self.known[e.1] &= !(1 << e.0);
        }
    }

    /// Advance every lex-leader test over the decided prefix; false when
    /// some image is already known to be smaller.
    fn lex_ok(&mut self) -> bool {
        let t = self.depth as u32;
        for (ci, c) in self.lex.iter_mut().enumerate() {
            if c.resolved {
                continue;
            }
            let (next0, res0) = (c.next, c.resolved);
            let mut ok = true;
            while c.next < t {
                let q = c.pre[c.next as usize];
                if q >= t {
                    break;
                }
                let a = self.decided[c.next as usize];
                let b = self.decided[q as usize];
                if a == b {
                    c.next += 1;
                } else if !a {
                    c.resolved = true;
                    break;
                } else {
                    ok = false;
                    break;
                }
            }
            if (c.next, c.resolved) != (next0, res0) {
                self.log.push(Undo::Lex { check: ci as u8, next: next0, resolved: res0 });
            }
            if !ok {
                return false;
            }
        }
        true
    }

    fn branches(&self) -> &'static [bool] {
        if self.bb.forced[self.depth] {
            &[true]
        } else {
            &[true, false]
        }
    }

    fn bound_total(&self) -> Option<u64> {
        match self.bb.bound {
            BoundKind::Walk => self.bounds.iter().map(WalkBound::total).min().flatten(),
            BoundKind::Degree => Some(degree_total(&self.known)),
        }
    }

    /// Prune tests for the current node; `Some(bound)` when it survives.
    fn admit(&mut self) -> Option<Option<u64>> {
        if !self.lex_ok() {
            self.stats.pruned_by_symmetry += 1;
            return None;
        }
        let bound = self.bound_total();
        if let Some(t) = &mut self.trace {
            t.push(TraceNode { decisions: self.decided.clone(), bound });
        }
        let dominated = match (bound, self.incumbent) {
            (None, _) => self.bb.bound == BoundKind::Walk,
            (Some(b), Some(i)) => b > i,
            (Some(_), None) => false,
        };
        if dominated {
            self.stats.pruned_by_bound += 1;
            return None;
        }
        Some(bound)
    }

    fn collect_prefixes(&mut self, depth: usize, prefix: &mut Vec<bool>, out: &mut Vec<Vec<bool>>) {
        self.stats.nodes_explored += 1;
        let mark = self.log.len();
        if self.admit().is_some() {
            if self.depth == depth {
                // Counted again as the root of its task.
                self.stats.nodes_explored -= 1;
                out.push(prefix.clone());
            } else {
                for &include in self.branches() {
                    let mark = self.log.len();
                    prefix.push(include);
                    self.decide(include);
                    self.collect_prefixes(depth, prefix, out);
                    self.undecide(mark);
                    prefix.pop();
                }
            }
        }
        self.rewind_lex(mark);
    }

    /// Undo lex entries logged at this node without touching decisions.
    fn rewind_lex(&mut self, mark: usize) {
        while self.log.len() > mark {
            if let Some(Undo::Lex { check, next, resolved }) = self.log.pop() {
                let c = &mut self.lex[check as usize];
                c.next = next;
                c.resolved = resolved;
            } else {
                unreachable!("only lex entries are logged at a node");
            }
        }
    }

    fn dfs(&mut self, budget: &dyn Budget) {
        if self.stopped {
            return;
        }
        self.stats.nodes_explored += 1;
        if self.stats.nodes_explored.is_multiple_of(NODES_PER_BUDGET_CHECK) && budget.exhausted() {
            self.stopped = true;
            return;
        }
        let mark = self.log.len();
        if let Some(bound) = self.admit() {
            if self.depth == self.bb.cands.len() {
                self.leaf(bound);
            } else {
                for &include in self.branches() {
                    let m = self.log.len();
                    self.decide(include);
                    self.dfs(budget);
                    self.undecide(m);
                }
            }
        }
        self.rewind_lex(mark);
    }

    fn leaf(&mut self, bound: Option<u64>) {
        self.stats.leaves_evaluated += 1;
        let mut g = Graph::bare(self.bb.eval.spec());
        for (e, &inc) in self.bb.cands.iter().zip(&self.decided) {
            if inc {
                g.set(e.0, e.1, true);
            }
        }
        let sym = self.bb.eval.symmetry();
        let frame = g.canonical_frame(sym);
        let total = match self.bb.bound {
            BoundKind::Walk => self
                .bounds
                .iter()
                .find(|b| sym.get(b.frame) == sym.get(frame))
                .and_then(WalkBound::total),
            BoundKind::Degree => None,
        };
        let total = match total {
            Some(t) => Some(t),
            None => self.bb.eval.objective(&g).total_cost(),
        };
        debug_assert_eq!(total, self.bb.eval.objective(&g).total_cost());
        let _ = bound;
        let Some(total) = total else { return };
        if self.incumbent.is_some_and(|i| total > i) {
            return;
        }
        self.incumbent = Some(total);
        let key = g.canonical_key(sym);
        self.found.offer(total, key, g.canonical_form(sym));
    }
}
