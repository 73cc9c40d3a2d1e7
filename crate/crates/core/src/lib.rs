//! Search for graph topologies over a regular lattice that minimize the
//! expected number of distance computations made by the greedy walk.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; IO, wall clocks and thread pools live in the
//! `navgraph` companion crate.
//!
//! Layout:
//!
//! * [`lattice`]: the indexed point set, metrics, base edges, symmetries.
//! * [`graph`]: candidate topologies with mandatory base edges.
//! * [`walk`]: the greedy walk, operation counting and the objective.
//! * [`exact`]: exhaustive enumeration and branch-and-bound.
//! * [`heuristic`]: steepest descent and simulated annealing.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
#[macro_use]
extern crate std;

pub mod error;
pub mod exact;
pub mod graph;
pub mod heuristic;
pub mod lattice;
pub mod walk;

pub use error::Error;
pub use exact::{
    branch_and_bound, brute_force, lower_bound, lower_bound_with, BoundKind, BranchAndBound, BranchOptions,
    Budget, NoBudget, PartialAssignment, SolveResult, SolveStats, TraceNode, BRUTE_FORCE_LIMIT,
};
pub use graph::{candidate_pairs, CanonicalKey, Edge, EdgeMove, Graph, MoveAction};
pub use heuristic::{local_search, HeuristicOptions, Strategy};
pub use lattice::{LatticeSpec, Metric, Point, SymmetryGroup, MAX_VERTICES};
pub use walk::{
    greedy_walk, monte_carlo_objective, objective, objective_delta, pair_cost,
    validate_reachability, Evaluator, McEstimate, McOptions, ObjectiveValue, PairCost,
    QuerySampler, WalkStep, WalkTrace,
};
