//! Error type shared across the crate.

/// Errors produced by matrix construction, graph validation, and solvers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A triplet's (row, col) index lies outside the declared shape.
    #[error("entry ({row}, {col}) out of range for a {nrows}x{ncols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    /// A matrix entry or input value is NaN or infinite.
    #[error("non-finite value {value} at ({row}, {col})")]
    NonFiniteValue { row: usize, col: usize, value: f64 },

    /// A vector or matrix dimension does not match what the operation expects.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A product of dimensions would overflow `usize`.
    #[error("matrix shape {a_rows}x{a_cols} kron {b_rows}x{b_cols} overflows usize")]
    ShapeOverflow {
        a_rows: usize,
        a_cols: usize,
        b_rows: usize,
        b_cols: usize,
    },

    /// A graph must contain at least the stated number of vertices.
    #[error("graph needs at least {minimum} vertices, got {got}")]
    TooFewVertices { minimum: usize, got: usize },

    /// An edge references a vertex outside `0..n_vertices`, is a self-loop,
    /// or duplicates an earlier edge.
    #[error("invalid edge ({from}, {to}): {reason}")]
    InvalidEdge {
        from: usize,
        to: usize,
        reason: &'static str,
    },

    /// An operation that requires a DAG was given a graph with a directed cycle.
    #[error("graph contains a directed cycle")]
    CyclicGraph,

    /// LDL^T factorization hit a non-positive pivot.
    #[error("matrix is not positive definite: pivot {index} = {value}")]
    NotPositiveDefinite { index: usize, value: f64 },

    /// An iterative solver produced NaN or infinite intermediates.
    #[error("numerical failure: {0}")]
    NumericalFailure(&'static str),

    /// A parameter violates its documented range (negative threshold,
    /// negative penalty weight, malformed lattice shape, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A Kronecker trend operation was requested without lattice geometry.
    #[error("kronecker trend filtering requires lattice dimensions")]
    MissingLattice,

    /// An edge-list document failed to parse.
    #[error("edge list parse error: {0}")]
    EdgeListParse(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
