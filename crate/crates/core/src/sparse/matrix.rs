//! Compressed sparse row matrix with a stored transpose index.
//!
//! Every matrix keeps both a CSR layout (fast row scans and `A*x`) and a
//! column index into the same value array (fast column scans and `A^T*x`),
//! so adjoint products never require materializing a second matrix.
//!
//! All products increment a thread-local counter of nonzeros touched, which
//! the scaling tests use to verify O(nnz) per-iteration cost empirically.

use crate::error::{Error, Result};
use std::cell::Cell;
use std::fmt::Write as _;

thread_local! {
    static NNZ_TOUCHED: Cell<u64> = const { Cell::new(0) };
}

/// Total nonzeros touched by sparse products on this thread since the last
/// [`reset_nnz_touched`].
pub fn nnz_touched() -> u64 {
    NNZ_TOUCHED.with(|c| c.get())
}

/// Resets this thread's nonzero-touch counter to zero.
pub fn reset_nnz_touched() {
    NNZ_TOUCHED.with(|c| c.set(0));
}

fn record_touches(n: usize) {
    NNZ_TOUCHED.with(|c| c.set(c.get().wrapping_add(n as u64)));
}

/// Immutable sparse matrix in CSR form with a parallel CSC index.
///
/// Zero-row matrices are legal and behave as expected: `A*x` is the empty
/// vector and `A^T*y` with an empty `y` is the zero vector. They represent
/// dropped penalty blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    // CSR: row i owns values[row_ptr[i]..row_ptr[i+1]] at columns col_idx[..].
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    // CSC index over the same entries: column j owns positions
    // col_ptr[j]..col_ptr[j+1]; entry t sits in row row_idx[t] and its value
    // lives at values[csr_pos[t]].
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    csr_pos: Vec<usize>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets.
    ///
    /// Duplicate coordinates are summed; entries that are exactly zero after
    /// summation are dropped. Indices must be in range and values finite.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::IndexOutOfRange {
                    row: r,
                    col: c,
                    nrows,
                    ncols,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    row: r,
                    col: c,
                    value: v,
                });
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        // Merge duplicates, then drop exact zeros.
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|&(_, _, v)| v != 0.0);

        let mut row_ptr = vec![0usize; nrows + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx: Vec<usize> = merged.iter().map(|t| t.1).collect();
        let values: Vec<f64> = merged.iter().map(|t| t.2).collect();

        let mut m = SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
            col_ptr: Vec::new(),
            row_idx: Vec::new(),
            csr_pos: Vec::new(),
        };
        m.build_column_index();
        Ok(m)
    }

    /// The `n`-by-`n` identity.
    pub fn identity(n: usize) -> Self {
        let triplets: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &triplets).expect("identity triplets are always valid")
    }

    /// A matrix with zero rows: the concatenation identity for stacking and a
    /// stand-in for penalty operators whose weight is zero.
    pub fn empty(ncols: usize) -> Self {
        Self::from_triplets(0, ncols, &[]).expect("empty triplets are always valid")
    }

    fn build_column_index(&mut self) {
        let nnz = self.values.len();
        let mut col_ptr = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            col_ptr[c + 1] += 1;
        }
        for j in 0..self.ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut cursor = col_ptr.clone();
        let mut row_idx = vec![0usize; nnz];
        let mut csr_pos = vec![0usize; nnz];
        for r in 0..self.nrows {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[p];
                let t = cursor[c];
                row_idx[t] = r;
                csr_pos[t] = p;
                cursor[c] += 1;
            }
        }
        self.col_ptr = col_ptr;
        self.row_idx = row_idx;
        self.csr_pos = csr_pos;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Number of stored (structurally nonzero) entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates the stored entries of row `i` as `(col, value)`, in ascending
    /// column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (lo..hi).map(move |p| (self.col_idx[p], self.values[p]))
    }

    /// Iterates the stored entries of column `j` as `(row, value)`, in
    /// ascending row order.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        (lo..hi).map(move |t| (self.row_idx[t], self.values[self.csr_pos[t]]))
    }

    /// Computes `A * x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                context: "matvec",
                expected: self.ncols,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.nrows];
        self.matvec_into(x, &mut out);
        Ok(out)
    }

    /// Computes `A * x` into a caller-provided buffer of length `nrows`.
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(out.len(), self.nrows);
        for i in 0..self.nrows {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            out[i] = acc;
        }
        record_touches(self.nnz());
    }

    /// Computes `A^T * x` using the stored column index.
    pub fn matvec_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                context: "matvec_transpose",
                expected: self.nrows,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.ncols];
        self.matvec_transpose_into(x, &mut out);
        Ok(out)
    }

    /// Computes `A^T * x` into a caller-provided buffer of length `ncols`.
    pub fn matvec_transpose_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(out.len(), self.ncols);
        for j in 0..self.ncols {
            let mut acc = 0.0;
            for t in self.col_ptr[j]..self.col_ptr[j + 1] {
                acc += self.values[self.csr_pos[t]] * x[self.row_idx[t]];
            }
            out[j] = acc;
        }
        record_touches(self.nnz());
    }

    /// Kronecker product `A (x) B`.
    ///
    /// Entry `((ia*B.nrows + ib), (ja*B.ncols + jb))` equals
    /// `A[ia,ja] * B[ib,jb]`. Fails if the output shape overflows `usize`.
    pub fn kron(a: &SparseMatrix, b: &SparseMatrix) -> Result<SparseMatrix> {
        let nrows = a
            .nrows
            .checked_mul(b.nrows)
            .ok_or(Error::ShapeOverflow {
                a_rows: a.nrows,
                a_cols: a.ncols,
                b_rows: b.nrows,
                b_cols: b.ncols,
            })?;
        let ncols = a
            .ncols
            .checked_mul(b.ncols)
            .ok_or(Error::ShapeOverflow {
                a_rows: a.nrows,
                a_cols: a.ncols,
                b_rows: b.nrows,
                b_cols: b.ncols,
            })?;
        a.nnz().checked_mul(b.nnz()).ok_or(Error::ShapeOverflow {
            a_rows: a.nrows,
            a_cols: a.ncols,
            b_rows: b.nrows,
            b_cols: b.ncols,
        })?;

        // Emit rows of the product in order; within a product row the column
        // indices are already ascending, so the CSR arrays can be built
        // directly without a sort.
        let nnz = a.nnz() * b.nnz();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for ia in 0..a.nrows {
            for ib in 0..b.nrows {
                for pa in a.row_ptr[ia]..a.row_ptr[ia + 1] {
                    let ja = a.col_idx[pa];
                    let va = a.values[pa];
                    for pb in b.row_ptr[ib]..b.row_ptr[ib + 1] {
                        let v = va * b.values[pb];
                        if v != 0.0 {
                            col_idx.push(ja * b.ncols + b.col_idx[pb]);
                            values.push(v);
                        }
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }

        let mut m = SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
            col_ptr: Vec::new(),
            row_idx: Vec::new(),
            csr_pos: Vec::new(),
        };
        m.build_column_index();
        Ok(m)
    }

    /// Dense row-major copy, mostly for tests and small fixtures.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows * self.ncols];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                out[i * self.ncols + j] = v;
            }
        }
        out
    }

    /// Sum of each row's entries; rows of difference-type operators sum to 0.
    pub fn row_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            out[i] = self.row(i).map(|(_, v)| v).sum();
        }
        out
    }

    /// Debug dump as `row col value` lines with 17 significant digits, in
    /// row-major order. Round-trips every f64 exactly.
    pub fn triplet_dump(&self) -> String {
        let mut s = String::new();
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                writeln!(s, "{} {} {:.16e}", i, j, v).expect("string write cannot fail");
            }
        }
        s
    }
}
