//! Sparse linear algebra: CSR/CSC matrices, SPD operators, conjugate
//! gradient, and LDL^T factorization.

mod cg;
mod ldl;
mod matrix;
mod spd;

pub use cg::{conjugate_gradient, CgResult};
pub use ldl::{factorize, Factorization};
pub use matrix::{nnz_touched, reset_nnz_touched, SparseMatrix};
pub use spd::SpdOperator;
