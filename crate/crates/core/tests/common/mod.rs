//! Shared plumbing for the integration suites: a dense brute-force reference
//! solver, dense operator constructions that bypass the library's sparse
//! kernels, and seeded random problem instances.
//!
//! The reference solver exists to catch bugs, so it shares nothing with the
//! production path: operators are dense `Vec<Vec<f64>>` rows built directly
//! from edge lists and index loops, and the optimizer is plain projected
//! gradient with a fixed step — no sparsity, no momentum, no restarts.

#![allow(dead_code)] // each test binary uses its own subset

use gtf_core::graph::{chain_graph, lattice_graph, DiGraph, LatticeSpec};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Largest absolute componentwise difference.
pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch in linf");
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

// ---------------------------------------------------------------------------
// Dense operators, built straight from definitions
// ---------------------------------------------------------------------------

/// Oriented incidence rows: one row per edge, `+1` at the source and `-1`
/// at the target.
pub fn dense_incidence(g: &DiGraph) -> Vec<Vec<f64>> {
    let n = g.n_vertices();
    g.edges()
        .iter()
        .map(|&(s, t)| {
            let mut row = vec![0.0; n];
            row[s] = 1.0;
            row[t] = -1.0;
            row
        })
        .collect()
}

/// Laplacian rows as the dense product of the incidence matrix with itself.
pub fn dense_laplacian(g: &DiGraph) -> Vec<Vec<f64>> {
    let n = g.n_vertices();
    let d = dense_incidence(g);
    let mut l = vec![vec![0.0; n]; n];
    for row in &d {
        for i in 0..n {
            if row[i] != 0.0 {
                for j in 0..n {
                    l[i][j] += row[i] * row[j];
                }
            }
        }
    }
    l
}

/// Per-axis second-difference rows on a column-major grid, vertical stencils
/// first: row `(1, -2, 1)` over each in-column triple, then over each
/// in-row triple. Axes shorter than 3 contribute nothing.
pub fn dense_kronecker(spec: &LatticeSpec) -> Vec<Vec<f64>> {
    let (n1, n2, n) = (spec.n1, spec.n2, spec.n());
    let at = |l: usize, k: usize| k * n1 + l;
    let mut rows = Vec::new();
    if n1 >= 3 {
        for k in 0..n2 {
            for l in 0..n1 - 2 {
                let mut row = vec![0.0; n];
                row[at(l, k)] = 1.0;
                row[at(l + 1, k)] = -2.0;
                row[at(l + 2, k)] = 1.0;
                rows.push(row);
            }
        }
    }
    if n2 >= 3 {
        for k in 0..n2 - 2 {
            for l in 0..n1 {
                let mut row = vec![0.0; n];
                row[at(l, k)] = 1.0;
                row[at(l, k + 1)] = -2.0;
                row[at(l, k + 2)] = 1.0;
                rows.push(row);
            }
        }
    }
    rows
}

// ---------------------------------------------------------------------------
// Brute-force reference solver
// ---------------------------------------------------------------------------

/// One penalty block for the reference solver: dense operator rows plus the
/// box its dual variables live in (`[-w, w]` for an l1 penalty, `[0, w]`
/// for a positive-part penalty).
pub struct OracleBlock {
    pub rows: Vec<Vec<f64>>,
    pub lo: f64,
    pub hi: f64,
}

impl OracleBlock {
    pub fn l1(rows: Vec<Vec<f64>>, weight: f64) -> Self {
        OracleBlock {
            rows,
            lo: -weight,
            hi: weight,
        }
    }

    pub fn positive_part(rows: Vec<Vec<f64>>, weight: f64) -> Self {
        OracleBlock {
            rows,
            lo: 0.0,
            hi: weight,
        }
    }
}

/// Minimizes `0.5 * ||y - B^T z||^2` over the per-block boxes by projected
/// gradient with step `1/L`, run until the projected-gradient residual
/// `||z - clamp(z - grad)||_inf` drops to `1e-10`, and returns the fitted
/// values `y - B^T z`. Panics instead of returning a low-quality answer.
pub fn oracle_solve(y: &[f64], blocks: &[OracleBlock]) -> Vec<f64> {
    let n = y.len();
    let mut rows: Vec<&[f64]> = Vec::new();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for b in blocks {
        for row in &b.rows {
            assert_eq!(row.len(), n, "operator row length mismatch");
            rows.push(row);
            lo.push(b.lo);
            hi.push(b.hi);
        }
    }
    let m = rows.len();
    if m == 0 {
        return y.to_vec();
    }

    // Fixed step from the largest eigenvalue of B B^T by power iteration.
    let mut v: Vec<f64> = (0..m).map(|i| 1.0 + (i as f64).sin()).collect();
    let mut lmax = 0.0f64;
    for _ in 0..300 {
        // w = B (B^T v)
        let mut bt_v = vec![0.0; n];
        for (i, row) in rows.iter().enumerate() {
            for j in 0..n {
                bt_v[j] += row[j] * v[i];
            }
        }
        let w: Vec<f64> = rows
            .iter()
            .map(|row| row.iter().zip(&bt_v).map(|(r, x)| r * x).sum())
            .collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            // B is the zero operator; any feasible z gives beta = y.
            return y.to_vec();
        }
        lmax = norm;
        v = w.iter().map(|x| x / norm).collect();
    }
    let step = 1.0 / (1.02 * lmax);

    let mut z = vec![0.0; m];
    let max_iter = 5_000_000;
    for _ in 0..max_iter {
        // residual r = y - B^T z; gradient of the dual objective is -B r.
        let mut r = y.to_vec();
        for (i, row) in rows.iter().enumerate() {
            if z[i] != 0.0 {
                for j in 0..n {
                    r[j] -= row[j] * z[i];
                }
            }
        }
        let grad: Vec<f64> = rows
            .iter()
            .map(|row| -row.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let mut kkt = 0.0f64;
        for i in 0..m {
            let fixed = (z[i] - grad[i]).clamp(lo[i], hi[i]);
            kkt = kkt.max((z[i] - fixed).abs());
        }
        if kkt <= 1e-10 {
            return (0..n)
                .map(|j| {
                    let mut b = y[j];
                    for (i, row) in rows.iter().enumerate() {
                        b -= row[j] * z[i];
                    }
                    b
                })
                .collect();
        }
        for i in 0..m {
            z[i] = (z[i] - step * grad[i]).clamp(lo[i], hi[i]);
        }
    }
    panic!("reference solver did not reach a 1e-10 residual in {max_iter} iterations");
}

// ---------------------------------------------------------------------------
// Seeded instances
// ---------------------------------------------------------------------------

/// A random problem: the graph, its grid geometry when it has one, and data.
pub struct Instance {
    pub graph: DiGraph,
    pub lattice: Option<LatticeSpec>,
    pub y: Vec<f64>,
}

impl Instance {
    /// Grid to hand the per-axis trend filter: the instance's own lattice,
    /// or the signal reread as a single-column grid.
    pub fn kron_spec(&self) -> LatticeSpec {
        self.lattice
            .unwrap_or_else(|| LatticeSpec::new(self.y.len(), 1).expect("nonempty signal"))
    }
}

/// Deterministic instance `k`: cycles through chains, lattices, and random
/// DAGs (all acyclic), with standard normal data and at most `max_n`
/// vertices.
pub fn seeded_instance(k: u64, max_n: usize) -> Instance {
    assert!(max_n >= 9, "instances need room for a 3x3 lattice");
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_5500 ^ k.wrapping_mul(0x9E37_79B9));
    let (graph, lattice) = match k % 3 {
        0 => {
            let n = rng.random_range(2..=max_n);
            (chain_graph(n).unwrap(), None)
        }
        1 => {
            let n1 = rng.random_range(2..=(max_n / 2).min(5));
            let n2 = rng.random_range(2..=(max_n / n1).min(8));
            let spec = LatticeSpec::new(n1, n2).unwrap();
            (lattice_graph(&spec), Some(spec))
        }
        _ => {
            let n = rng.random_range(4..=max_n);
            // Edges only point from lower to higher labels, so the graph is
            // acyclic by construction.
            let p = (3.0 / n as f64).min(0.4);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random_range(0.0..1.0) < p {
                        edges.push((i, j));
                    }
                }
            }
            if edges.is_empty() {
                edges.push((0, 1));
            }
            (DiGraph::new(n, edges).unwrap(), None)
        }
    };
    let normal = Normal::new(0.0, 1.0).unwrap();
    let y = (0..graph.n_vertices())
        .map(|_| normal.sample(&mut rng))
        .collect();
    Instance { graph, lattice, y }
}

/// Penalty weight spread over two decades, deterministic in `(k, which)`.
pub fn seeded_lambda(k: u64, which: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1A3B_DA00 ^ (k * 31 + which));
    10f64.powf(rng.random_range(-1.0..1.0))
}
