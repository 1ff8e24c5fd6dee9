//! Fused trend filtering on directed graphs.
//!
//! This crate fits piecewise-smooth signals observed on the vertices of a
//! directed graph by minimizing a least-squares loss plus sparse operator
//! penalties:
//!
//! ```text
//! 0.5 * ||y - beta||^2  +  lambda_f * ||D beta||_1       (fused lasso)
//!                       +  lambda_ni * sum max(D beta, 0) (nearly isotonic)
//!                       +  lambda_t * ||T beta||_1        (trend filtering)
//! ```
//!
//! where `D` is the oriented incidence matrix and `T` is either the graph
//! Laplacian or, on regular grids, stacked per-axis second-difference
//! stencils. Penalties can be combined freely, including arbitrary mixes of
//! l1 and positive-part terms over custom operators.
//!
//! Two solver engines are provided and agree to solver tolerance:
//!
//! * a projected-gradient method on the box-constrained dual, which
//!   recovers the primal solution exactly as `beta = y - B^T z`, and
//! * an operator-splitting (ADMM) iteration whose linear systems are solved
//!   either matrix-free (conjugate gradient) or by a sparse LDL^T
//!   factorization computed once per problem.
//!
//! The crate layers cleanly: [`sparse`] holds the CSR matrix type and the
//! linear solvers, [`graph`] the graph and grid model, [`operators`] the
//! penalty operators, [`solvers`] the two engines, [`estimators`] the named
//! fits, and [`experiments`] synthetic data and a benchmark harness. The
//! `parallel` feature (on by default) fans independent runs out across a
//! rayon pool capped by the `GTF_THREADS` environment variable; without it
//! the same code paths run sequentially.
//!
//! # Example
//!
//! ```
//! use gtf_core::estimators::{fused_lasso, SolverOptions};
//! use gtf_core::graph::chain_graph;
//!
//! let g = chain_graph(2)?;
//! let fit = fused_lasso(&[0.0, 1.0], &g, 0.25, &SolverOptions::default())?;
//! assert!((fit.beta[0] - 0.25).abs() < 1e-6);
//! assert!((fit.beta[1] - 0.75).abs() < 1e-6);
//! # Ok::<(), gtf_core::Error>(())
//! ```

pub mod error;
pub mod estimators;
pub mod experiments;
pub mod graph;
pub mod operators;
pub mod parallel;
pub mod solvers;
pub mod sparse;

pub use error::{Error, Result};
