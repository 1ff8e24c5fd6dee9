//! Sparse LDL^T factorization with a reverse Cuthill-McKee fill-reducing
//! ordering, for the direct backend of the ADMM beta update.
//!
//! The factorization is the classic up-looking algorithm: an elimination
//! tree is computed from the upper-triangular pattern, each row of L is
//! found by walking the tree, and the numeric phase performs one sparse
//! triangular solve per column. Pivots are not chosen — the input must be
//! symmetric positive definite, and a non-positive pivot aborts.

use crate::error::{Error, Result};
use crate::sparse::{SparseMatrix, SpdOperator};

const NONE: usize = usize::MAX;

/// An LDL^T factorization `P M P^T = (I + L) D (I + L)^T` with strictly
/// lower-triangular `L` and positive diagonal `D`.
#[derive(Debug, Clone)]
pub struct Factorization {
    /// `perm[new] = old`: the fill-reducing vertex order.
    perm: Vec<usize>,
    /// Strictly lower-triangular factor, column access via the CSC index.
    lower: SparseMatrix,
    /// Diagonal of `D`, all entries positive.
    diag: Vec<f64>,
}

/// Reverse Cuthill-McKee ordering of the adjacency structure of a symmetric
/// sparse matrix (diagonal ignored). Returns `perm` with `perm[new] = old`.
fn rcm_order(a: &SparseMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in 0..n {
        for (c, _) in a.row(r) {
            if c != r {
                neighbors[r].push(c);
            }
        }
    }
    let degree: Vec<usize> = neighbors.iter().map(|v| v.len()).collect();
    // Visiting low-degree neighbors first keeps the bandwidth of the
    // Cuthill-McKee profile small.
    for nb in neighbors.iter_mut() {
        nb.sort_unstable_by_key(|&v| (degree[v], v));
    }

    let bfs = |root: usize, visited: &mut [bool], order: &mut Vec<usize>| -> usize {
        // Returns the last vertex visited (a pseudo-peripheral candidate).
        let start = order.len();
        visited[root] = true;
        order.push(root);
        let mut head = start;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &w in &neighbors[v] {
                if !visited[w] {
                    visited[w] = true;
                    order.push(w);
                }
            }
        }
        *order.last().expect("bfs visits at least the root")
    };

    let mut visited = vec![false; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    loop {
        // Lowest-degree unvisited vertex starts the next component.
        let start = match (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree[v], v))
        {
            Some(v) => v,
            None => break,
        };
        // One throwaway sweep to find a vertex far from the start, then the
        // real sweep from there.
        let mut probe_visited = visited.clone();
        let mut probe_order = Vec::new();
        let far = bfs(start, &mut probe_visited, &mut probe_order);
        bfs(far, &mut visited, &mut order);
    }
    order.reverse();
    order
}

/// Factors the SPD operator as `P M P^T = (I + L) D (I + L)^T`.
///
/// Fails with [`Error::NotPositiveDefinite`] if any pivot is zero or
/// negative.
pub fn factorize(m: &SpdOperator) -> Result<Factorization> {
    let a = m.materialize();
    let n = a.nrows();
    let perm = rcm_order(&a);
    let mut iperm = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        iperm[old] = new;
    }

    // Permuted upper triangle (including the diagonal) by columns. The
    // matrix is symmetric and stores both triangles, so each off-diagonal
    // unordered pair is seen twice and kept exactly once.
    let mut col_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for r in 0..n {
        let i = iperm[r];
        for (c, v) in a.row(r) {
            let j = iperm[c];
            if i <= j {
                col_entries[j].push((i, v));
            }
        }
    }

    // Symbolic phase: elimination tree and column counts of L.
    let mut parent = vec![NONE; n];
    let mut lnz = vec![0usize; n];
    let mut flag = vec![NONE; n];
    for k in 0..n {
        flag[k] = k;
        for &(row, _) in &col_entries[k] {
            let mut i = row;
            while i < k && flag[i] != k {
                if parent[i] == NONE {
                    parent[i] = k;
                }
                lnz[i] += 1;
                flag[i] = k;
                i = parent[i];
            }
        }
    }

    // Numeric phase: up-looking sparse triangular solves.
    let mut lp = vec![0usize; n + 1];
    for i in 0..n {
        lp[i + 1] = lp[i] + lnz[i];
    }
    let total = lp[n];
    let mut li = vec![0usize; total];
    let mut lx = vec![0.0f64; total];
    let mut fill = vec![0usize; n];
    let mut y = vec![0.0f64; n];
    let mut pattern = vec![0usize; n];
    let mut stack = vec![0usize; n];
    let mut diag = vec![0.0f64; n];
    flag.fill(NONE);

    for k in 0..n {
        // Scatter column k of the permuted upper triangle into y and find
        // the pattern of row k of L by walking the elimination tree.
        let mut top = n;
        flag[k] = k;
        for &(row, val) in &col_entries[k] {
            y[row] += val;
            let mut len = 0;
            let mut i = row;
            while i < k && flag[i] != k {
                stack[len] = i;
                len += 1;
                flag[i] = k;
                i = parent[i];
            }
            while len > 0 {
                len -= 1;
                top -= 1;
                pattern[top] = stack[len];
            }
        }
        let mut dk = y[k];
        y[k] = 0.0;
        for t in top..n {
            let i = pattern[t];
            let yi = y[i];
            y[i] = 0.0;
            let p2 = lp[i] + fill[i];
            for p in lp[i]..p2 {
                y[li[p]] -= lx[p] * yi;
            }
            let l_ki = yi / diag[i];
            dk -= l_ki * yi;
            li[p2] = k;
            lx[p2] = l_ki;
            fill[i] += 1;
        }
        if !dk.is_finite() {
            return Err(Error::NumericalFailure("ldl pivot is not finite"));
        }
        if dk <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                index: k,
                value: dk,
            });
        }
        diag[k] = dk;
    }

    // Package L (strictly lower, entries (row=li, col=i)) with both
    // traversal orders available.
    let mut triplets = Vec::with_capacity(total);
    for i in 0..n {
        for p in lp[i]..lp[i + 1] {
            triplets.push((li[p], i, lx[p]));
        }
    }
    let lower = SparseMatrix::from_triplets(n, n, &triplets)?;

    Ok(Factorization { perm, lower, diag })
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `perm[new] = old`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// The strictly lower-triangular factor in the permuted order.
    pub fn lower_factor(&self) -> &SparseMatrix {
        &self.lower
    }

    /// The diagonal of `D` in the permuted order.
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Solves `M x = b` by permuting, two triangular solves, and a diagonal
    /// scaling.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.diag.len();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                context: "factorization solve",
                expected: n,
                got: b.len(),
            });
        }
        let mut z: Vec<f64> = (0..n).map(|i| b[self.perm[i]]).collect();
        // (I + L) w = z, columns left to right.
        for j in 0..n {
            let zj = z[j];
            if zj != 0.0 {
                for (i, v) in self.lower.col(j) {
                    z[i] -= v * zj;
                }
            }
        }
        for j in 0..n {
            z[j] /= self.diag[j];
        }
        // (I + L)^T x = z, columns right to left.
        for j in (0..n).rev() {
            let mut acc = z[j];
            for (i, v) in self.lower.col(j) {
                acc -= v * z[i];
            }
            z[j] = acc;
        }
        let mut out = vec![0.0; n];
        for j in 0..n {
            out[self.perm[j]] = z[j];
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_diff(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.push((i, i, 1.0));
            t.push((i, i + 1, -1.0));
        }
        SparseMatrix::from_triplets(n - 1, n, &t).unwrap()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn factors_identity() {
        let m = SpdOperator::new(3, 1.0, vec![]).unwrap();
        let f = factorize(&m).unwrap();
        assert_eq!(f.diagonal(), &[1.0, 1.0, 1.0]);
        assert_eq!(f.lower_factor().nnz(), 0);
        assert_eq!(f.solve(&[4.0, 5.0, 6.0]).unwrap(), vec![4.0, 5.0, 6.0]);
    }

    #[test]
    fn solves_two_by_two_system_exactly() {
        // M = [[2, -1], [-1, 2]], b = (1, 0), solution (2/3, 1/3).
        let d = first_diff(2);
        let m = SpdOperator::new(2, 1.0, vec![(1.0, d)]).unwrap();
        let f = factorize(&m).unwrap();
        let x = f.solve(&[1.0, 0.0]).unwrap();
        assert!((x[0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((x[1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn factor_is_strictly_lower_with_positive_diagonal() {
        let d = first_diff(10);
        let m = SpdOperator::new(10, 0.5, vec![(2.0, d)]).unwrap();
        let f = factorize(&m).unwrap();
        for j in 0..10 {
            for (i, _) in f.lower_factor().col(j) {
                assert!(i > j, "entry ({i}, {j}) is not strictly lower");
            }
        }
        assert!(f.diagonal().iter().all(|&d| d > 0.0));
    }

    #[test]
    fn reconstructs_permuted_matrix() {
        // Check P M P^T == (I+L) D (I+L)^T entrywise on a small system.
        let d = first_diff(6);
        let op = SpdOperator::new(6, 1.0, vec![(1.3, d)]).unwrap();
        let m = op.materialize();
        let f = factorize(&op).unwrap();
        let n = 6;
        let md = m.to_dense();
        let ld = f.lower_factor().to_dense();
        let mut recon = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    let lik = if i == k { 1.0 } else { ld[i * n + k] };
                    let ljk = if j == k { 1.0 } else { ld[j * n + k] };
                    acc += lik * f.diagonal()[k] * ljk;
                }
                recon[i * n + j] = acc;
            }
        }
        let p = f.permutation();
        for i in 0..n {
            for j in 0..n {
                let want = md[p[i] * n + p[j]];
                assert!((recon[i * n + j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_rhs_residuals_are_tiny() {
        // Chain Gram system, 100 unknowns, 50 right-hand sides.
        let n = 100;
        let d = first_diff(n);
        let op = SpdOperator::new(n, 1.0, vec![(1.0, d)]).unwrap();
        let f = factorize(&op).unwrap();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..50 {
            let b: Vec<f64> = (0..n).map(|_| next()).collect();
            let x = f.solve(&b).unwrap();
            let mx = op.apply(&x).unwrap();
            let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            let rnorm = max_abs_diff(&mx, &b);
            assert!(rnorm <= 1e-10 * bnorm.max(1.0), "residual {rnorm}");
        }
    }

    #[test]
    fn lattice_gram_system_agrees_with_cg() {
        // 5x5 grid Laplacian-style system solved both ways.
        let n1 = 5usize;
        let n2 = 5usize;
        let n = n1 * n2;
        let idx = |l: usize, k: usize| k * n1 + l;
        let mut t = Vec::new();
        let mut row = 0;
        for k in 0..n2 {
            for l in 0..n1 - 1 {
                t.push((row, idx(l, k), 1.0));
                t.push((row, idx(l + 1, k), -1.0));
                row += 1;
            }
        }
        for k in 0..n2 - 1 {
            for l in 0..n1 {
                t.push((row, idx(l, k), 1.0));
                t.push((row, idx(l, k + 1), -1.0));
                row += 1;
            }
        }
        let d = SparseMatrix::from_triplets(row, n, &t).unwrap();
        let op = SpdOperator::new(n, 1.0, vec![(1.0, d)]).unwrap();
        let f = factorize(&op).unwrap();
        let b: Vec<f64> = (0..n).map(|i| ((i * 13 % 7) as f64) - 3.0).collect();
        let direct = f.solve(&b).unwrap();
        let iterative =
            crate::sparse::conjugate_gradient(&op, &b, &vec![0.0; n], 1e-12, 10 * n).unwrap();
        assert!(iterative.converged);
        assert!(max_abs_diff(&direct, &iterative.x) < 1e-8);
    }

    #[test]
    fn solve_rejects_wrong_length() {
        let m = SpdOperator::new(3, 1.0, vec![]).unwrap();
        let f = factorize(&m).unwrap();
        assert!(matches!(
            f.solve(&[1.0, 2.0]).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }
}
