//! Solvers for the penalized least-squares problems: an ADMM splitting
//! method with two penalty blocks, and a projected-gradient solver for the
//! box-constrained dual. Both return the same result shape so estimators can
//! swap engines freely.

mod admm;
mod dual;

pub use admm::{
    admm_lambda_sweep, admm_solve, admm_solve_with, AdmmConfig, AdmmState, Backend,
};
pub use dual::{dual_solve, dual_solve_with, BoxedDualProblem, DualBlock, DualSolution};

use crate::error::{Error, Result};
use crate::operators::PenaltySpec;

/// One fit, whichever engine produced it.
///
/// `primal_residual` / `dual_residual` are engine diagnostics: the ADMM
/// residual pair for the splitting engine, and (KKT residual, 0) for the
/// dual engine.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub objective: f64,
    pub converged: bool,
    /// Per-iteration diagnostics; empty unless tracing was requested.
    pub trace: Vec<TraceRow>,
}

/// One row of a solver convergence trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub r_pri: f64,
    pub r_dual: f64,
    pub objective: f64,
}

/// Formats trace rows as the CSV the CLI writes: a header plus one row per
/// recorded iteration.
pub fn trace_to_csv(rows: &[TraceRow]) -> String {
    let mut s = String::from("iter,r_pri,r_dual,objective\n");
    for r in rows {
        s.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e}\n",
            r.iter, r.r_pri, r.r_dual, r.objective
        ));
    }
    s
}

/// Elementwise soft threshold `sign(x) * max(|x| - t, 0)`, the proximal
/// operator of `t * ||.||_1`. The threshold must be finite and nonnegative.
pub fn soft_threshold(x: &[f64], t: f64) -> Result<Vec<f64>> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "soft threshold must be finite and nonnegative, got {t}"
        )));
    }
    Ok(x.iter().map(|&v| soft_threshold_scalar(v, t)).collect())
}

pub(crate) fn soft_threshold_scalar(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// `sum_i max(x_i, 0)`: the one-sided norm behind the nearly-isotonic
/// penalty.
pub fn positive_part_norm(x: &[f64]) -> f64 {
    x.iter().map(|&v| v.max(0.0)).sum()
}

/// Evaluates `0.5 * ||y - beta||^2 + sum_i penalty_i(beta)`.
pub fn objective_value(y: &[f64], beta: &[f64], penalties: &[PenaltySpec]) -> Result<f64> {
    if y.len() != beta.len() {
        return Err(Error::DimensionMismatch {
            context: "objective",
            expected: y.len(),
            got: beta.len(),
        });
    }
    let fit: f64 = y
        .iter()
        .zip(beta.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let mut obj = 0.5 * fit;
    for p in penalties {
        obj += p.evaluate(beta)?;
    }
    Ok(obj)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
