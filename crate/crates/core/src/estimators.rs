//! User-facing estimators: fused lasso, nearly-isotonic regression, trend
//! filtering (general-graph and grid variants), their combinations, and the
//! mixed multi-penalty filter.
//!
//! Every estimator minimizes `0.5*||y - beta||^2` plus operator penalties
//! and can run on either engine:
//!
//! * [`Engine::Dual`] — projected gradient on the box-constrained dual;
//!   also the only engine for [`mixed_trend_filter`].
//! * [`Engine::Admm`] — operator splitting; nearly-isotonic penalties are
//!   handled by shifting the data (`y - (w/2) * D^T 1`) and solving the
//!   corresponding two-sided problem with weight `w/2`, which has the same
//!   minimizer.
//!
//! Because every built-in operator has zero row sums, fitted values always
//! satisfy `sum(beta) = sum(y)` up to floating-point drift; each solve is
//! checked against that identity (see [`conservation`]).

use crate::error::{Error, Result};
use crate::graph::{lattice_graph, DiGraph, LatticeSpec};
use crate::operators::{
    trend_operator, PenaltyKind, PenaltySpec, TrendKind,
};
use crate::solvers::{
    admm_solve_with, dual_solve_with, objective_value, AdmmConfig, BoxedDualProblem, DualBlock,
    SolveResult,
};
use crate::sparse::SparseMatrix;

/// Which solver an estimator call uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    Admm,
    #[default]
    Dual,
}

/// Engine selection plus per-engine tuning knobs.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub engine: Engine,
    pub admm: AdmmConfig,
    /// KKT tolerance for the dual engine; `None` scales 1e-8 with the data.
    pub dual_tol: Option<f64>,
    pub dual_max_iter: usize,
    /// Record per-iteration diagnostics in the result, whichever engine runs.
    pub collect_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            engine: Engine::Dual,
            admm: AdmmConfig::default(),
            dual_tol: None,
            dual_max_iter: 200_000,
            collect_trace: false,
        }
    }
}

impl SolverOptions {
    fn dual_tolerance(&self, y: &[f64]) -> f64 {
        self.dual_tol
            .unwrap_or_else(|| 1e-8 * (1.0 + max_abs(y)))
    }
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Audit trail for the sum-conservation identity `sum(beta) = sum(y)`.
///
/// Every estimator records its solve here. The drift is compared against
/// `1e-6 * n * ||y||_inf`; in debug builds exceeding that bound panics
/// immediately, and test suites can assert [`worst_ratio`](conservation::worst_ratio)
/// stayed at or below one across everything they ran.
pub mod conservation {
    use std::sync::atomic::{AtomicU64, Ordering};

    static WORST_RATIO_BITS: AtomicU64 = AtomicU64::new(0);

    /// Records one solve. `y` is the original data, `beta` the fitted values.
    pub(crate) fn record(y: &[f64], beta: &[f64]) {
        let sum_y: f64 = y.iter().sum();
        let sum_b: f64 = beta.iter().sum();
        let drift = (sum_y - sum_b).abs();
        let bound = 1e-6 * y.len() as f64 * super::max_abs(y);
        let ratio = if drift == 0.0 {
            0.0
        } else if bound == 0.0 {
            f64::INFINITY
        } else {
            drift / bound
        };
        let mut current = WORST_RATIO_BITS.load(Ordering::Relaxed);
        while ratio > f64::from_bits(current) {
            match WORST_RATIO_BITS.compare_exchange_weak(
                current,
                ratio.to_bits(),
                Ordering::Relaxed,
                Ordering::Relaxed,
            ) {
                Ok(_) => break,
                Err(seen) => current = seen,
            }
        }
        debug_assert!(
            ratio <= 1.0,
            "sum conservation violated: |sum(y) - sum(beta)| = {drift:.3e} \
             exceeds 1e-6 * n * ||y||_inf = {bound:.3e}"
        );
    }

    /// Worst `drift / bound` ratio seen since the last [`reset`]; at most
    /// `1.0` when every recorded solve conserved the sum.
    pub fn worst_ratio() -> f64 {
        f64::from_bits(WORST_RATIO_BITS.load(Ordering::Relaxed))
    }

    /// Clears the audit trail.
    pub fn reset() {
        WORST_RATIO_BITS.store(0, Ordering::Relaxed);
    }
}

fn check_signal(y: &[f64], g: &DiGraph) -> Result<()> {
    if y.len() != g.n_vertices() {
        return Err(Error::DimensionMismatch {
            context: "signal length vs graph",
            expected: g.n_vertices(),
            got: y.len(),
        });
    }
    Ok(())
}

fn finish_dual(
    y: &[f64],
    blocks: Vec<DualBlock>,
    penalties: &[PenaltySpec],
    opts: &SolverOptions,
) -> Result<SolveResult> {
    let problem = BoxedDualProblem::new(y.to_vec(), blocks)?;
    let sol = dual_solve_with(
        &problem,
        opts.dual_tolerance(y),
        opts.dual_max_iter,
        opts.collect_trace,
    )?;
    let objective = objective_value(y, &sol.beta, penalties)?;
    conservation::record(y, &sol.beta);
    Ok(SolveResult {
        beta: sol.beta,
        iterations: sol.iterations,
        primal_residual: sol.kkt_residual,
        dual_residual: 0.0,
        objective,
        converged: sol.converged,
        trace: sol.trace,
    })
}

/// ADMM run where the solver may see shifted data (`y_solver`) while the
/// objective and conservation check use the original `y`.
#[allow(clippy::too_many_arguments)]
fn finish_admm(
    y: &[f64],
    y_solver: &[f64],
    d: &SparseMatrix,
    t: &SparseMatrix,
    lambda_f: f64,
    lambda_t: f64,
    penalties: &[PenaltySpec],
    opts: &SolverOptions,
) -> Result<SolveResult> {
    let cfg = AdmmConfig {
        collect_trace: opts.collect_trace || opts.admm.collect_trace,
        ..opts.admm.clone()
    };
    let (raw, _) = admm_solve_with(y_solver, d, t, lambda_f, lambda_t, &cfg, None)?;
    let objective = objective_value(y, &raw.beta, penalties)?;
    conservation::record(y, &raw.beta);
    Ok(SolveResult {
        objective,
        ..raw
    })
}

/// Fused lasso on a graph: `0.5*||y - beta||^2 + lambda_f * ||D beta||_1`
/// with `D` the oriented incidence matrix.
pub fn fused_lasso(
    y: &[f64],
    g: &DiGraph,
    lambda_f: f64,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    check_signal(y, g)?;
    let d = g.incidence_matrix();
    let penalties = [PenaltySpec::new(d.clone(), PenaltyKind::L1, lambda_f)?];
    match opts.engine {
        Engine::Dual => finish_dual(y, vec![DualBlock::l1(d, lambda_f)?], &penalties, opts),
        Engine::Admm => {
            let empty = SparseMatrix::empty(y.len());
            finish_admm(y, y, &d, &empty, lambda_f, 0.0, &penalties, opts)
        }
    }
}

/// Shift that turns a nearly-isotonic penalty into a two-sided one: the
/// minimizer of the one-sided problem at weight `w` equals that of the
/// two-sided problem at weight `w/2` on data `y - (w/2) * D^T 1`.
fn isotonic_shift(y: &[f64], d: &SparseMatrix, weight: f64) -> Result<Vec<f64>> {
    let ones = vec![1.0; d.nrows()];
    let shift = d.matvec_transpose(&ones)?;
    Ok(y.iter()
        .zip(shift.iter())
        .map(|(v, s)| v - 0.5 * weight * s)
        .collect())
}

/// Nearly-isotonic regression on a DAG:
/// `0.5*||y - beta||^2 + lambda_ni * sum_e max((D beta)_e, 0)`, penalizing
/// edges whose source exceeds their target.
pub fn nearly_isotonic(
    y: &[f64],
    g: &DiGraph,
    lambda_ni: f64,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    check_signal(y, g)?;
    if !g.is_dag() {
        return Err(Error::CyclicGraph);
    }
    let d = g.incidence_matrix();
    let penalties = [PenaltySpec::new(d.clone(), PenaltyKind::PositivePart, lambda_ni)?];
    match opts.engine {
        Engine::Dual => finish_dual(
            y,
            vec![DualBlock::positive_part(d, lambda_ni)?],
            &penalties,
            opts,
        ),
        Engine::Admm => {
            let shifted = isotonic_shift(y, &d, lambda_ni)?;
            let empty = SparseMatrix::empty(y.len());
            finish_admm(
                y,
                &shifted,
                &d,
                &empty,
                0.5 * lambda_ni,
                0.0,
                &penalties,
                opts,
            )
        }
    }
}

/// Trend filtering with the graph Laplacian:
/// `0.5*||y - beta||^2 + lambda_t * ||L beta||_1`.
pub fn general_trend_filter(
    y: &[f64],
    g: &DiGraph,
    lambda_t: f64,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    check_signal(y, g)?;
    let l = g.laplacian();
    let penalties = [PenaltySpec::new(l.clone(), PenaltyKind::L1, lambda_t)?];
    match opts.engine {
        Engine::Dual => finish_dual(y, vec![DualBlock::l1(l, lambda_t)?], &penalties, opts),
        Engine::Admm => {
            let empty = SparseMatrix::empty(y.len());
            finish_admm(y, y, &empty, &l, 0.0, lambda_t, &penalties, opts)
        }
    }
}

/// Trend filtering on a grid with stacked per-axis second differences:
/// `0.5*||y - beta||^2 + lambda_t * ||K beta||_1`.
pub fn kronecker_trend_filter(
    y: &[f64],
    spec: &LatticeSpec,
    lambda_t: f64,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    if y.len() != spec.n() {
        return Err(Error::DimensionMismatch {
            context: "signal length vs lattice",
            expected: spec.n(),
            got: y.len(),
        });
    }
    let g = lattice_graph(spec);
    let k = trend_operator(&g, Some(spec), TrendKind::Kronecker)?;
    let penalties = [PenaltySpec::new(k.clone(), PenaltyKind::L1, lambda_t)?];
    match opts.engine {
        Engine::Dual => finish_dual(y, vec![DualBlock::l1(k, lambda_t)?], &penalties, opts),
        Engine::Admm => {
            let empty = SparseMatrix::empty(y.len());
            finish_admm(y, y, &empty, &k, 0.0, lambda_t, &penalties, opts)
        }
    }
}

/// Fused lasso plus trend filtering:
/// `0.5*||y - beta||^2 + lambda_f*||D beta||_1 + lambda_t*||T beta||_1`
/// where `T` is chosen by `trend` (the Laplacian, or the grid stencil, which
/// requires `lattice`).
pub fn fused_trend_filter(
    y: &[f64],
    g: &DiGraph,
    lattice: Option<&LatticeSpec>,
    lambda_f: f64,
    lambda_t: f64,
    trend: TrendKind,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    check_signal(y, g)?;
    let d = g.incidence_matrix();
    let t = trend_operator(g, lattice, trend)?;
    let penalties = [
        PenaltySpec::new(d.clone(), PenaltyKind::L1, lambda_f)?,
        PenaltySpec::new(t.clone(), PenaltyKind::L1, lambda_t)?,
    ];
    match opts.engine {
        Engine::Dual => finish_dual(
            y,
            vec![
                DualBlock::l1(d, lambda_f)?,
                DualBlock::l1(t, lambda_t)?,
            ],
            &penalties,
            opts,
        ),
        Engine::Admm => finish_admm(y, y, &d, &t, lambda_f, lambda_t, &penalties, opts),
    }
}

/// Nearly-isotonic regression plus trend filtering on a DAG:
/// `0.5*||y - beta||^2 + lambda_ni * sum max(D beta, 0) + lambda_t*||T beta||_1`.
pub fn nearly_isotonic_trend_filter(
    y: &[f64],
    g: &DiGraph,
    lattice: Option<&LatticeSpec>,
    lambda_ni: f64,
    lambda_t: f64,
    trend: TrendKind,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    check_signal(y, g)?;
    if !g.is_dag() {
        return Err(Error::CyclicGraph);
    }
    let d = g.incidence_matrix();
    let t = trend_operator(g, lattice, trend)?;
    let penalties = [
        PenaltySpec::new(d.clone(), PenaltyKind::PositivePart, lambda_ni)?,
        PenaltySpec::new(t.clone(), PenaltyKind::L1, lambda_t)?,
    ];
    match opts.engine {
        Engine::Dual => finish_dual(
            y,
            vec![
                DualBlock::positive_part(d, lambda_ni)?,
                DualBlock::l1(t, lambda_t)?,
            ],
            &penalties,
            opts,
        ),
        Engine::Admm => {
            let shifted = isotonic_shift(y, &d, lambda_ni)?;
            finish_admm(
                y,
                &shifted,
                &d,
                &t,
                0.5 * lambda_ni,
                lambda_t,
                &penalties,
                opts,
            )
        }
    }
}

/// Arbitrary mix of l1 and positive-part penalties,
/// `0.5*||y - beta||^2 + sum_i w_i * kind_i(A_i beta)`. Always solved
/// through the dual engine; `opts.engine` is ignored.
pub fn mixed_trend_filter(
    y: &[f64],
    penalties: &[PenaltySpec],
    opts: &SolverOptions,
) -> Result<SolveResult> {
    let mut blocks = Vec::with_capacity(penalties.len());
    let mut conserves_sum = true;
    for p in penalties {
        blocks.push(match p.kind {
            PenaltyKind::L1 => DualBlock::l1(p.operator.clone(), p.weight)?,
            PenaltyKind::PositivePart => {
                DualBlock::positive_part(p.operator.clone(), p.weight)?
            }
        });
        // The conservation identity needs zero row sums; arbitrary
        // operators may not have them.
        if p.operator.row_sums().iter().any(|s| s.abs() > 1e-10) {
            conserves_sum = false;
        }
    }
    let problem = BoxedDualProblem::new(y.to_vec(), blocks)?;
    let sol = dual_solve_with(
        &problem,
        opts.dual_tolerance(y),
        opts.dual_max_iter,
        opts.collect_trace,
    )?;
    let objective = objective_value(y, &sol.beta, penalties)?;
    if conserves_sum {
        conservation::record(y, &sol.beta);
    }
    Ok(SolveResult {
        beta: sol.beta,
        iterations: sol.iterations,
        primal_residual: sol.kkt_residual,
        dual_residual: 0.0,
        objective,
        converged: sol.converged,
        trace: sol.trace,
    })
}

/// Isotonic regression as the large-weight limit of [`nearly_isotonic`]:
/// the one-sided weight is pushed to `1000 * range(y)`, beyond which every
/// remaining order violation is smaller than the solver tolerance.
pub fn isotonic_limit(y: &[f64], g: &DiGraph, opts: &SolverOptions) -> Result<SolveResult> {
    check_signal(y, g)?;
    if !g.is_dag() {
        return Err(Error::CyclicGraph);
    }
    let range = y.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
        - y.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    if !range.is_finite() {
        return Err(Error::NumericalFailure("isotonic input is not finite"));
    }
    // Constant signals are already isotonic.
    if range == 0.0 {
        conservation::record(y, y);
        return Ok(SolveResult {
            beta: y.to_vec(),
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            objective: 0.0,
            converged: true,
            trace: Vec::new(),
        });
    }
    let tight = SolverOptions {
        engine: Engine::Dual,
        dual_tol: Some(
            opts.dual_tol
                .unwrap_or_else(|| 1e-9 * (1.0 + max_abs(y))),
        ),
        dual_max_iter: opts.dual_max_iter.max(500_000),
        ..opts.clone()
    };
    nearly_isotonic(y, g, 1e3 * range, &tight)
}
