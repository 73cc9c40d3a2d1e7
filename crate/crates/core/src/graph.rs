//! Candidate topologies: symmetric adjacency with a fixed set of base edges.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::error::Error;
use crate::lattice::{LatticeSpec, SymmetryGroup};

/// Unordered vertex pair, stored with the smaller endpoint first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge(pub usize, pub usize);

impl Edge {
    pub fn new(a: usize, b: usize) -> Self {
        if a <= b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }

    pub fn map(&self, perm: &[usize]) -> Edge {
        Edge::new(perm[self.0], perm[self.1])
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.0, self.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MoveAction {
    Add,
    Remove,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeMove {
    pub action: MoveAction,
    pub edge: Edge,
}

impl EdgeMove {
    pub fn add(a: usize, b: usize) -> Self {
        Self { action: MoveAction::Add, edge: Edge::new(a, b) }
    }

    pub fn remove(a: usize, b: usize) -> Self {
        Self { action: MoveAction::Remove, edge: Edge::new(a, b) }
    }

    pub fn inverse(&self) -> Self {
        let action = match self.action {
            MoveAction::Add => MoveAction::Remove,
            MoveAction::Remove => MoveAction::Add,
        };
        Self { action, edge: self.edge }
    }
}

/// Lexicographic minimum, over a symmetry group, of the serialized shortcut
/// relation. Bits follow ascending pair order, most significant first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey(pub Vec<u8>);

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

/// All vertex pairs that are not base edges, in ascending order.
pub fn candidate_pairs(spec: &LatticeSpec) -> Vec<Edge> {
    let base = Graph::bare(spec);
    let n = spec.n();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for u in 0..n {
        for v in u + 1..n {
            if !base.is_base(u, v) {
                out.push(Edge(u, v));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    spec: LatticeSpec,
    adj: Vec<u64>,
    base: Vec<u64>,
}

impl Graph {
    /// Base lattice edges plus `extra`. Extras that are base edges are accepted.
    pub fn new(spec: &LatticeSpec, extra: &[Edge]) -> Result<Self, Error> {
        let mut g = Self::bare(spec);
        for e in extra {
            spec.check_vertex(e.0)?;
            spec.check_vertex(e.1)?;
            if e.0 == e.1 {
                return Err(Error::SelfLoop(e.0));
            }
            g.set(e.0, e.1, true);
        }
        Ok(g)
    }

    /// The lattice alone.
    pub fn bare(spec: &LatticeSpec) -> Self {
        let n = spec.n();
        let mut base = alloc::vec![0u64; n];
        for e in spec.base_edges() {
            base[e.0] |= 1 << e.1;
            base[e.1] |= 1 << e.0;
        }
        Self { spec: *spec, adj: base.clone(), base }
    }

    pub fn complete(spec: &LatticeSpec) -> Self {
        let mut g = Self::bare(spec);
        let n = spec.n();
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        for v in 0..n {
            g.adj[v] = full & !(1 << v);
        }
        g
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub(crate) fn set(&mut self, u: usize, v: usize, on: bool) {
        if on {
            self.adj[u] |= 1 << v;
            self.adj[v] |= 1 << u;
        } else {
            self.adj[u] &= !(1 << v);
            self.adj[v] &= !(1 << u);
        }
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && v < self.n() && self.adj[u] >> v & 1 == 1
    }

    pub fn is_base(&self, u: usize, v: usize) -> bool {
        u < self.n() && v < self.n() && self.base[u] >> v & 1 == 1
    }

    /// Adjacency rows as bitsets.
    pub fn rows(&self) -> &[u64] {
        &self.adj
    }

    pub fn base_rows(&self) -> &[u64] {
        &self.base
    }

    pub fn neighbor_mask(&self, v: usize) -> u64 {
        self.adj[v]
    }

    pub fn neighbors(&self, v: usize) -> Result<Vec<usize>, Error> {
        self.spec.check_vertex(v)?;
        Ok(bits(self.adj[v]).collect())
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones() as usize
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|r| r.count_ones() as usize).sum::<usize>() / 2
    }

    /// Every edge, ascending.
    pub fn edges(&self) -> Vec<Edge> {
        self.collect_edges(&self.adj)
    }

    /// Non-base edges, ascending.
    pub fn extra_edges(&self) -> Vec<Edge> {
        let extra: Vec<u64> = self.adj.iter().zip(&self.base).map(|(a, b)| a & !b).collect();
        self.collect_edges(&extra)
    }

    fn collect_edges(&self, rows: &[u64]) -> Vec<Edge> {
        let mut out = Vec::new();
        for (u, &row) in rows.iter().enumerate() {
            out.extend(bits(row >> u >> 1 << 1 << u).map(|v| Edge(u, v)));
        }
        out
    }

    pub fn check_move(&self, m: &EdgeMove) -> Result<(), Error> {
        let Edge(u, v) = m.edge;
        self.spec.check_vertex(u)?;
        self.spec.check_vertex(v)?;
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        match m.action {
            MoveAction::Add if self.has_edge(u, v) => Err(Error::EdgePresent(u, v)),
            MoveAction::Remove if self.is_base(u, v) => Err(Error::BaseEdgeRemoval(u, v)),
            MoveAction::Remove if !self.has_edge(u, v) => Err(Error::EdgeAbsent(u, v)),
            _ => Ok(()),
        }
    }

    pub fn apply_move_in_place(&mut self, m: &EdgeMove) -> Result<(), Error> {
        self.check_move(m)?;
        self.set(m.edge.0, m.edge.1, m.action == MoveAction::Add);
        Ok(())
    }

    pub fn apply_move(&self, m: &EdgeMove) -> Result<Graph, Error> {
        let mut g = self.clone();
        g.apply_move_in_place(m)?;
        Ok(g)
    }

    /// Image of the graph under a vertex permutation of the same lattice.
    pub fn relabel(&self, perm: &[usize]) -> Graph {
        Graph {
            spec: self.spec,
            adj: permute_rows(&self.adj, perm),
            base: permute_rows(&self.base, perm),
        }
    }

    /// Index of the first group element whose image has the smallest
    /// serialized shortcut relation.
    pub fn canonical_frame(&self, sym: &SymmetryGroup) -> usize {
        let mut best = 0;
        let mut best_rows = self.adj.clone();
        let mut scratch = alloc::vec![0u64; self.n()];
        for (k, perm) in sym.permutations().iter().enumerate().skip(1) {
            permute_rows_into(&self.adj, perm, &mut scratch);
            if compare_rows(&scratch, &best_rows) == Ordering::Less {
                best = k;
                core::mem::swap(&mut best_rows, &mut scratch);
            }
        }
        best
    }

    /// The orbit member the canonical key is read from.
    pub fn canonical_form(&self, sym: &SymmetryGroup) -> Graph {
        self.relabel(sym.get(self.canonical_frame(sym)))
    }

    pub fn canonical_key(&self, sym: &SymmetryGroup) -> CanonicalKey {
        self.canonical_form(sym).serialize_extra()
    }

    fn serialize_extra(&self) -> CanonicalKey {
        let n = self.n();
        let total = n * n.saturating_sub(1) / 2;
        let mut bytes = alloc::vec![0u8; total.div_ceil(8)];
        let mut pos = 0;
        for u in 0..n {
            for v in u + 1..n {
                if self.has_edge(u, v) && !self.is_base(u, v) {
                    bytes[pos / 8] |= 0x80 >> (pos % 8);
                }
                pos += 1;
            }
        }
        CanonicalKey(bytes)
    }
}

pub(crate) fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    core::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let b = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(b)
        }
    })
}

fn permute_rows(rows: &[u64], perm: &[usize]) -> Vec<u64> {
    let mut out = alloc::vec![0u64; rows.len()];
    permute_rows_into(rows, perm, &mut out);
    out
}

fn permute_rows_into(rows: &[u64], perm: &[usize], out: &mut [u64]) {
    out.iter_mut().for_each(|r| *r = 0);
    for (u, &row) in rows.iter().enumerate() {
        let mut img = 0u64;
        for v in bits(row) {
            img |= 1 << perm[v];
        }
        out[perm[u]] = img;
    }
}

/// Order of the serialized upper-triangle relation (ascending pair order).
/// Rows must be symmetric relations on the same vertex set.
pub(crate) fn compare_rows(a: &[u64], b: &[u64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let d = x ^ y;
        if d != 0 {
            let j = d.trailing_zeros();
            return if x >> j & 1 == 0 { Ordering::Less } else { Ordering::Greater };
        }
    }
    Ordering::Equal
}
