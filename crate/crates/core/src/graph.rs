//! Directed graphs, lattice geometry, and the incidence/Laplacian matrices
//! the penalties are built from.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use std::collections::HashSet;
use std::fmt::Write as _;

/// A directed graph over vertices `0..n_vertices` with an ordered edge list.
///
/// Edge order is part of the graph's identity: incidence-matrix rows follow
/// it, and so do the signs and positions of every penalty built on top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiGraph {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl DiGraph {
    /// Builds a graph, rejecting out-of-range endpoints, self-loops, and
    /// duplicate edges.
    pub fn new(n_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::TooFewVertices { minimum: 1, got: 0 });
        }
        let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(edges.len());
        for &(s, t) in &edges {
            if s >= n_vertices || t >= n_vertices {
                return Err(Error::InvalidEdge {
                    from: s,
                    to: t,
                    reason: "vertex index out of range",
                });
            }
            if s == t {
                return Err(Error::InvalidEdge {
                    from: s,
                    to: t,
                    reason: "self-loop",
                });
            }
            if !seen.insert((s, t)) {
                return Err(Error::InvalidEdge {
                    from: s,
                    to: t,
                    reason: "duplicate edge",
                });
            }
        }
        Ok(DiGraph { n_vertices, edges })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Oriented incidence matrix: one row per edge with `+1` at the source
    /// and `-1` at the target, so `(D beta)_e = beta_source - beta_target`.
    pub fn incidence_matrix(&self) -> SparseMatrix {
        let mut triplets = Vec::with_capacity(2 * self.edges.len());
        for (e, &(s, t)) in self.edges.iter().enumerate() {
            triplets.push((e, s, 1.0));
            triplets.push((e, t, -1.0));
        }
        SparseMatrix::from_triplets(self.edges.len(), self.n_vertices, &triplets)
            .expect("incidence triplets are always valid")
    }

    /// Graph Laplacian `D^T D`: degree on the diagonal, `-1` per edge in
    /// each orientation. Symmetric positive semidefinite.
    pub fn laplacian(&self) -> SparseMatrix {
        let mut triplets = Vec::with_capacity(4 * self.edges.len());
        for &(s, t) in &self.edges {
            triplets.push((s, s, 1.0));
            triplets.push((t, t, 1.0));
            triplets.push((s, t, -1.0));
            triplets.push((t, s, -1.0));
        }
        SparseMatrix::from_triplets(self.n_vertices, self.n_vertices, &triplets)
            .expect("laplacian triplets are always valid")
    }

    /// True when the graph has no directed cycle (Kahn's algorithm).
    pub fn is_dag(&self) -> bool {
        let n = self.n_vertices;
        let mut indegree = vec![0usize; n];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(s, t) in &self.edges {
            indegree[t] += 1;
            out[s].push(t);
        }
        let mut queue: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut removed = 0;
        while let Some(v) = queue.pop() {
            removed += 1;
            for &w in &out[v] {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    queue.push(w);
                }
            }
        }
        removed == n
    }

    /// Serializes as an edge-list document: a `n_vertices n_edges` header
    /// line, then one `source target` line per edge in order.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{} {}", self.n_vertices, self.edges.len())
            .expect("string write cannot fail");
        for &(src, tgt) in &self.edges {
            writeln!(s, "{} {}", src, tgt).expect("string write cannot fail");
        }
        s
    }

    /// Parses the edge-list format written by [`DiGraph::to_edge_list`].
    /// Blank lines are ignored; the edge count must match the header.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::EdgeListParse("empty document".to_string()))?;
        let mut parts = header.split_whitespace();
        let n_vertices: usize = parts
            .next()
            .ok_or_else(|| Error::EdgeListParse("missing vertex count".to_string()))?
            .parse()
            .map_err(|_| Error::EdgeListParse(format!("bad vertex count in {header:?}")))?;
        let n_edges: usize = parts
            .next()
            .ok_or_else(|| Error::EdgeListParse("missing edge count".to_string()))?
            .parse()
            .map_err(|_| Error::EdgeListParse(format!("bad edge count in {header:?}")))?;
        if parts.next().is_some() {
            return Err(Error::EdgeListParse(format!(
                "header {header:?} has trailing fields"
            )));
        }
        let mut edges = Vec::with_capacity(n_edges);
        for line in lines {
            let mut parts = line.split_whitespace();
            let s: usize = parts
                .next()
                .ok_or_else(|| Error::EdgeListParse(format!("bad edge line {line:?}")))?
                .parse()
                .map_err(|_| Error::EdgeListParse(format!("bad edge line {line:?}")))?;
            let t: usize = parts
                .next()
                .ok_or_else(|| Error::EdgeListParse(format!("bad edge line {line:?}")))?
                .parse()
                .map_err(|_| Error::EdgeListParse(format!("bad edge line {line:?}")))?;
            if parts.next().is_some() {
                return Err(Error::EdgeListParse(format!(
                    "edge line {line:?} has trailing fields"
                )));
            }
            edges.push((s, t));
        }
        if edges.len() != n_edges {
            return Err(Error::EdgeListParse(format!(
                "header promises {n_edges} edges, document has {}",
                edges.len()
            )));
        }
        DiGraph::new(n_vertices, edges)
    }
}

/// Shape of a regular 2-d grid: `n1` rows, `n2` columns, vertices numbered
/// column-major so `(row l, col k) -> k*n1 + l` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeSpec {
    pub n1: usize,
    pub n2: usize,
}

impl LatticeSpec {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "lattice dimensions must be positive, got {n1}x{n2}"
            )));
        }
        n1.checked_mul(n2).ok_or_else(|| {
            Error::InvalidParameter(format!("lattice {n1}x{n2} overflows usize"))
        })?;
        Ok(LatticeSpec { n1, n2 })
    }

    /// Total number of vertices.
    pub fn n(&self) -> usize {
        self.n1 * self.n2
    }

    /// Column-major vertex number of grid position `(row l, col k)`.
    pub fn vertex(&self, l: usize, k: usize) -> usize {
        debug_assert!(l < self.n1 && k < self.n2);
        k * self.n1 + l
    }
}

/// Path graph `0 -> 1 -> ... -> n-1`. A single vertex gives zero edges.
pub fn chain_graph(n: usize) -> Result<DiGraph> {
    if n == 0 {
        return Err(Error::TooFewVertices { minimum: 1, got: 0 });
    }
    let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    DiGraph::new(n, edges)
}

/// Grid graph over a [`LatticeSpec`], edges oriented from lower to higher
/// index. All within-column edges come first (scanning columns left to
/// right), then all within-row edges (same scan), so the incidence rows of a
/// `1 x n` or `n x 1` lattice coincide with the chain's.
pub fn lattice_graph(spec: &LatticeSpec) -> DiGraph {
    let (n1, n2) = (spec.n1, spec.n2);
    let mut edges = Vec::with_capacity(n1 * n2 * 2);
    for k in 0..n2 {
        for l in 0..n1.saturating_sub(1) {
            edges.push((spec.vertex(l, k), spec.vertex(l + 1, k)));
        }
    }
    for k in 0..n2.saturating_sub(1) {
        for l in 0..n1 {
            edges.push((spec.vertex(l, k), spec.vertex(l, k + 1)));
        }
    }
    DiGraph::new(spec.n(), edges).expect("lattice edges are always valid")
}

/// True when `g` has no directed cycle.
pub fn validate_dag(g: &DiGraph) -> bool {
    g.is_dag()
}
