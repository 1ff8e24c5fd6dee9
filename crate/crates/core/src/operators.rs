//! Difference operators and penalty specifications.
//!
//! Everything a trend-filtering objective multiplies a signal by lives here:
//! first/second difference matrices on chains, the graph Laplacian used as a
//! general trend operator, the Kronecker second-difference operator for
//! regular grids, and vertical stacking of operator blocks.

use crate::error::{Error, Result};
use crate::graph::{DiGraph, LatticeSpec};
use crate::sparse::SparseMatrix;

/// How a penalty block scores its operator's output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyKind {
    /// `sum_i |x_i|` — shrinks differences toward zero from both sides.
    L1,
    /// `sum_i max(x_i, 0)` — penalizes only positive entries, so a block on
    /// the incidence matrix penalizes decreases along edges and leaves
    /// increases free.
    PositivePart,
}

/// One additive penalty term `weight * kind(operator * beta)`.
#[derive(Debug, Clone)]
pub struct PenaltySpec {
    pub operator: SparseMatrix,
    pub kind: PenaltyKind,
    pub weight: f64,
}

impl PenaltySpec {
    pub fn new(operator: SparseMatrix, kind: PenaltyKind, weight: f64) -> Result<Self> {
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "penalty weight must be finite and nonnegative, got {weight}"
            )));
        }
        Ok(PenaltySpec {
            operator,
            kind,
            weight,
        })
    }

    /// Evaluates `weight * kind(operator * beta)`.
    pub fn evaluate(&self, beta: &[f64]) -> Result<f64> {
        let v = self.operator.matvec(beta)?;
        let raw = match self.kind {
            PenaltyKind::L1 => v.iter().map(|x| x.abs()).sum::<f64>(),
            PenaltyKind::PositivePart => v.iter().map(|x| x.max(0.0)).sum::<f64>(),
        };
        Ok(self.weight * raw)
    }
}

/// Which trend operator a lattice estimator should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendKind {
    /// Graph Laplacian `D^T D` — defined on any graph.
    General,
    /// Stacked per-axis second differences — requires lattice geometry and
    /// penalizes curvature along rows and columns separately.
    Kronecker,
}

/// Forward difference matrix on a chain: `(n-1) x n`, row `i` is
/// `e_i - e_{i+1}` scaled so `(D x)_i = x_i - x_{i+1}`.
pub fn first_difference_matrix(n: usize) -> Result<SparseMatrix> {
    if n < 2 {
        return Err(Error::TooFewVertices { minimum: 2, got: n });
    }
    let mut t = Vec::with_capacity(2 * (n - 1));
    for i in 0..n - 1 {
        t.push((i, i, 1.0));
        t.push((i, i + 1, -1.0));
    }
    SparseMatrix::from_triplets(n - 1, n, &t)
}

/// Second difference matrix on a chain: `(n-2) x n`, row `i` carries the
/// stencil `(1, -2, 1)` at columns `i, i+1, i+2`.
pub fn second_difference_matrix(n: usize) -> Result<SparseMatrix> {
    if n < 3 {
        return Err(Error::TooFewVertices { minimum: 3, got: n });
    }
    let mut t = Vec::with_capacity(3 * (n - 2));
    for i in 0..n - 2 {
        t.push((i, i, 1.0));
        t.push((i, i + 1, -2.0));
        t.push((i, i + 2, 1.0));
    }
    SparseMatrix::from_triplets(n - 2, n, &t)
}

/// Stacks operator blocks vertically. All blocks must share a column count;
/// zero-row blocks are legal and contribute nothing. Stacking no blocks over
/// `ncols` columns yields the `0 x ncols` matrix.
pub fn stack_operators(blocks: &[&SparseMatrix], ncols: usize) -> Result<SparseMatrix> {
    let mut triplets = Vec::new();
    let mut offset = 0usize;
    for block in blocks {
        if block.ncols() != ncols {
            return Err(Error::DimensionMismatch {
                context: "stack_operators",
                expected: ncols,
                got: block.ncols(),
            });
        }
        for i in 0..block.nrows() {
            for (j, v) in block.row(i) {
                triplets.push((offset + i, j, v));
            }
        }
        offset += block.nrows();
    }
    SparseMatrix::from_triplets(offset, ncols, &triplets)
}

/// Grid trend operator: per-axis second differences stacked as
/// `[I_{n2} kron T(n1); T(n2) kron I_{n1}]` where `T` is the chain second
/// difference. An axis shorter than 3 contributes no rows; a grid with both
/// axes shorter than 3 yields a zero-row operator (every signal is "smooth").
pub fn kronecker_trend_matrix(spec: &LatticeSpec) -> SparseMatrix {
    let n = spec.n();
    let mut blocks: Vec<SparseMatrix> = Vec::new();
    if spec.n1 >= 3 {
        let t1 = second_difference_matrix(spec.n1).expect("n1 >= 3");
        blocks.push(
            SparseMatrix::kron(&SparseMatrix::identity(spec.n2), &t1)
                .expect("kron of in-range shapes cannot overflow"),
        );
    }
    if spec.n2 >= 3 {
        let t2 = second_difference_matrix(spec.n2).expect("n2 >= 3");
        blocks.push(
            SparseMatrix::kron(&t2, &SparseMatrix::identity(spec.n1))
                .expect("kron of in-range shapes cannot overflow"),
        );
    }
    let refs: Vec<&SparseMatrix> = blocks.iter().collect();
    stack_operators(&refs, n).expect("blocks share the lattice column count")
}

/// Selects the trend operator for a graph: the Laplacian for
/// [`TrendKind::General`], the stacked per-axis second differences for
/// [`TrendKind::Kronecker`] (which requires a lattice whose size matches the
/// graph).
pub fn trend_operator(
    g: &DiGraph,
    lattice: Option<&LatticeSpec>,
    kind: TrendKind,
) -> Result<SparseMatrix> {
    match kind {
        TrendKind::General => Ok(g.laplacian()),
        TrendKind::Kronecker => {
            let spec = lattice.ok_or(Error::MissingLattice)?;
            if spec.n() != g.n_vertices() {
                return Err(Error::DimensionMismatch {
                    context: "kronecker trend lattice",
                    expected: g.n_vertices(),
                    got: spec.n(),
                });
            }
            Ok(kronecker_trend_matrix(spec))
        }
    }
}
