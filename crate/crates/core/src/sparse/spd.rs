//! Symmetric positive definite operators of the form
//! `c*I + sum_i w_i * A_i^T * A_i`, applied matrix-free or materialized.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// An SPD operator built from an identity term plus weighted Gram terms.
///
/// This is exactly the shape of the linear systems the ADMM solver has to
/// invert, so both the conjugate-gradient path (matrix-free `apply`) and the
/// factorization path (`materialize`) consume it.
#[derive(Debug, Clone)]
pub struct SpdOperator {
    dim: usize,
    identity_weight: f64,
    terms: Vec<(f64, SparseMatrix)>,
}

impl SpdOperator {
    /// Builds the operator `identity_weight * I + sum w_i A_i^T A_i` on
    /// `R^dim`.
    ///
    /// Weights must be finite and nonnegative, every `A_i` must have `dim`
    /// columns, and `identity_weight` must be strictly positive so the
    /// operator is positive definite even when all Gram terms vanish.
    pub fn new(dim: usize, identity_weight: f64, terms: Vec<(f64, SparseMatrix)>) -> Result<Self> {
        if !identity_weight.is_finite() || identity_weight <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "identity weight must be finite and positive, got {identity_weight}"
            )));
        }
        for (w, a) in &terms {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "gram term weight must be finite and nonnegative, got {w}"
                )));
            }
            if a.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    context: "spd gram term",
                    expected: dim,
                    got: a.ncols(),
                });
            }
        }
        Ok(SpdOperator {
            dim,
            identity_weight,
            terms,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Applies the operator to `x` without forming the matrix.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "spd apply",
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut out: Vec<f64> = x.iter().map(|v| self.identity_weight * v).collect();
        for (w, a) in &self.terms {
            if *w == 0.0 || a.nrows() == 0 {
                continue;
            }
            let ax = a.matvec(x)?;
            let ata_x = a.matvec_transpose(&ax)?;
            for (o, g) in out.iter_mut().zip(ata_x.iter()) {
                *o += w * g;
            }
        }
        Ok(out)
    }

    /// Forms the operator as an explicit sparse matrix (for factorization).
    pub fn materialize(&self) -> SparseMatrix {
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..self.dim {
            triplets.push((i, i, self.identity_weight));
        }
        for (w, a) in &self.terms {
            if *w == 0.0 {
                continue;
            }
            // (A^T A)[j,k] = sum over rows i of A[i,j]*A[i,k]; each row of A
            // contributes the outer product of its entries.
            for i in 0..a.nrows() {
                let row: Vec<(usize, f64)> = a.row(i).collect();
                for &(j, vj) in &row {
                    for &(k, vk) in &row {
                        triplets.push((j, k, w * vj * vk));
                    }
                }
            }
        }
        SparseMatrix::from_triplets(self.dim, self.dim, &triplets)
            .expect("materialized SPD triplets are always in range and finite")
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

    #[test]
    fn identity_only_operator_is_scaling() {
        let op = SpdOperator::new(3, 2.0, vec![]).unwrap();
        assert_eq!(op.apply(&[1.0, -1.0, 0.5]).unwrap(), vec![2.0, -2.0, 1.0]);
        let m = op.materialize();
        assert_eq!(m.to_dense(), vec![2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn apply_matches_materialized_matrix() {
        let d = first_diff(4);
        let op = SpdOperator::new(4, 1.0, vec![(0.7, d)]).unwrap();
        let m = op.materialize();
        let x = [0.3, -1.2, 2.0, 0.1];
        let via_apply = op.apply(&x).unwrap();
        let via_matrix = m.matvec(&x).unwrap();
        for (a, b) in via_apply.iter().zip(via_matrix.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn materialize_of_chain_gram_is_tridiagonal() {
        // I + D^T D on a 3-chain: diag (2, 3, 2), off-diag -1.
        let d = first_diff(3);
        let m = SpdOperator::new(3, 1.0, vec![(1.0, d)]).unwrap().materialize();
        assert_eq!(
            m.to_dense(),
            vec![2.0, -1.0, 0.0, -1.0, 3.0, -1.0, 0.0, -1.0, 2.0]
        );
    }

    #[test]
    fn zero_weight_and_zero_row_terms_are_skipped() {
        let d = first_diff(3);
        let e = SparseMatrix::empty(3);
        let op = SpdOperator::new(3, 1.0, vec![(0.0, d), (1.0, e)]).unwrap();
        assert_eq!(op.apply(&[5.0, 6.0, 7.0]).unwrap(), vec![5.0, 6.0, 7.0]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SpdOperator::new(3, 0.0, vec![]).is_err());
        assert!(SpdOperator::new(3, f64::NAN, vec![]).is_err());
        let d = first_diff(3);
        assert!(SpdOperator::new(3, 1.0, vec![(-1.0, d.clone())]).is_err());
        assert!(SpdOperator::new(4, 1.0, vec![(1.0, d)]).is_err());
    }
}
