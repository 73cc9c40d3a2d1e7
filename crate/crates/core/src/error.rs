use thiserror::Error;

/// Errors reported by the core toolkit.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("lattice dimensions must be positive, got {rows}x{cols}")]
    EmptyLattice { rows: usize, cols: usize },
    #[error("lattice {rows}x{cols} has more than {max} vertices")]
    LatticeTooLarge { rows: usize, cols: usize, max: usize },
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("point dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("edge ({0}, {1}) is a base lattice edge and cannot be removed")]
    BaseEdgeRemoval(usize, usize),
    #[error("edge ({0}, {1}) is already present")]
    EdgePresent(usize, usize),
    #[error("edge ({0}, {1}) is not present")]
    EdgeAbsent(usize, usize),
    #[error("objective cache does not match the graph")]
    StaleCache,
    #[error("zero samples requested")]
    ZeroSamples,
    #[error("{count} candidate pairs exceed the enumeration limit of {limit}; use branch_and_bound")]
    TooManyCandidates { count: usize, limit: usize },
    #[error("invalid heuristic options: {0}")]
    InvalidOptions(&'static str),
}
