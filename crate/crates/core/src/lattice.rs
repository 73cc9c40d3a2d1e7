//! The indexed point set: a `rows x cols` regular lattice with unit spacing.
//!
//! Vertices are numbered row-major, vertex `k` sits at `(k mod cols, k div cols)`.

use alloc::vec::Vec;
use core::fmt;

use crate::error::Error;
use crate::graph::Edge;

/// Adjacency rows are `u64` bitsets, which caps the vertex count.
pub const MAX_VERTICES: usize = 64;

/// A point in the plane.
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeSpec {
    rows: usize,
    cols: usize,
}

impl LatticeSpec {
    pub fn new(rows: usize, cols: usize) -> Result<Self, Error> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyLattice { rows, cols });
        }
        if rows * cols > MAX_VERTICES {
            return Err(Error::LatticeTooLarge { rows, cols, max: MAX_VERTICES });
        }
        Ok(Self { rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Vertex count.
    pub fn n(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn check_vertex(&self, v: usize) -> Result<(), Error> {
        if v < self.n() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: v, n: self.n() })
        }
    }

    /// Integer grid position `(col, row)` of a vertex. Caller guarantees range.
    pub(crate) fn grid(&self, v: usize) -> (i64, i64) {
        ((v % self.cols) as i64, (v / self.cols) as i64)
    }

    pub(crate) fn vertex_at(&self, x: i64, y: i64) -> usize {
        y as usize * self.cols + x as usize
    }

    pub fn node_coordinates(&self, v: usize) -> Result<Point, Error> {
        self.check_vertex(v)?;
        let (x, y) = self.grid(v);
        Ok([x as f64, y as f64])
    }

    /// Horizontal and vertical unit-step adjacencies, in ascending pair order.
    pub fn base_edges(&self) -> Vec<Edge> {
        let mut edges = Vec::with_capacity(self.rows * (self.cols - 1) + self.cols * (self.rows - 1));
        for v in 0..self.n() {
            let (x, y) = self.grid(v);
            if x + 1 < self.cols as i64 {
                edges.push(Edge::new(v, v + 1));
            }
            if y + 1 < self.rows as i64 {
                edges.push(Edge::new(v, v + self.cols));
            }
        }
        edges.sort_unstable();
        edges
    }

    pub fn symmetry_group(&self) -> SymmetryGroup {
        SymmetryGroup::of(self)
    }
}

impl fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    L1,
    L2,
    Linf,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::L1, Metric::L2, Metric::Linf];

    pub fn distance(&self, p: &[f64], q: &[f64]) -> Result<f64, Error> {
        if p.len() != q.len() {
            return Err(Error::DimensionMismatch(p.len(), q.len()));
        }
        let deltas = p.iter().zip(q).map(|(a, b)| libm::fabs(a - b));
        Ok(match self {
            Metric::L1 => deltas.sum(),
            Metric::L2 => libm::sqrt(deltas.map(|d| d * d).sum()),
            Metric::Linf => deltas.fold(0.0, f64::max),
        })
    }

    /// Order-preserving surrogate of the planar distance: squared for L2.
    pub fn rank_key(&self, dx: f64, dy: f64) -> f64 {
        let (dx, dy) = (libm::fabs(dx), libm::fabs(dy));
        match self {
            Metric::L1 => dx + dy,
            Metric::L2 => dx * dx + dy * dy,
            Metric::Linf => dx.max(dy),
        }
    }

    /// Exact integer version of [`Metric::rank_key`] for lattice offsets.
    pub fn rank_key_int(&self, dx: i64, dy: i64) -> u32 {
        let (dx, dy) = (dx.unsigned_abs() as u32, dy.unsigned_abs() as u32);
        match self {
            Metric::L1 => dx + dy,
            Metric::L2 => dx * dx + dy * dy,
            Metric::Linf => dx.max(dy),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metric::L1 => "l1",
            Metric::L2 => "l2",
            Metric::Linf => "linf",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Metric {
    type Err = &'static str;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Metric::L1),
            "l2" => Ok(Metric::L2),
            "linf" | "l_inf" | "inf" => Ok(Metric::Linf),
            _ => Err("expected one of l1, l2, linf"),
        }
    }
}

/// Vertex permutations induced by the isometries of the lattice rectangle.
///
/// The identity is always element 0. Square lattices get the eight elements
/// of D4, rectangular ones the four elements of D2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetryGroup {
    perms: Vec<Vec<usize>>,
}

impl SymmetryGroup {
    fn of(spec: &LatticeSpec) -> Self {
        let (w, h) = (spec.cols as i64 - 1, spec.rows as i64 - 1);
        let mut maps: Vec<fn(i64, i64, i64, i64) -> (i64, i64)> = alloc::vec![
            |x, y, _, _| (x, y),
            |x, y, w, _| (w - x, y),
            |x, y, _, h| (x, h - y),
            |x, y, w, h| (w - x, h - y),
        ];
        if spec.is_square() {
            maps.extend_from_slice(&[
                |x, y, _, _| (y, x),
                |x, y, w, _| (w - y, x),
                |x, y, _, h| (y, h - x),
                |x, y, w, h| (w - y, h - x),
            ]);
        }
        let perms = maps
            .into_iter()
            .map(|f| {
                (0..spec.n())
                    .map(|v| {
                        let (x, y) = spec.grid(v);
                        let (nx, ny) = f(x, y, w, h);
                        spec.vertex_at(nx, ny)
                    })
                    .collect()
            })
            .collect();
        Self { perms }
    }

    pub fn len(&self) -> usize {
        self.perms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perms.is_empty()
    }

    pub fn permutations(&self) -> &[Vec<usize>] {
        &self.perms
    }

    pub fn get(&self, index: usize) -> &[usize] {
        &self.perms[index]
    }

    pub fn vertex_count(&self) -> usize {
        self.perms.first().map_or(0, Vec::len)
    }
}
