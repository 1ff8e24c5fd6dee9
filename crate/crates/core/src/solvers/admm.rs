//! ADMM for the two-block penalized problem
//! `min 0.5*||y - beta||^2 + lambda_f*||D beta||_1 + lambda_t*||T beta||_1`.
//!
//! The splitting introduces one auxiliary variable per penalty block. Each
//! iteration solves the SPD system
//! `(I + rho1*D^T D + rho2*T^T T) beta = y + rho1*D^T(a1 + u1) + rho2*T^T(a2 + u2)`,
//! soft-thresholds each block, and takes a scaled dual step:
//!
//! ```text
//! a_k <- shrink(A_k beta - u_k, lambda_k / rho_k)
//! u_k <- u_k + a_k - A_k beta
//! ```
//!
//! Blocks whose weight is zero (or whose operator has no rows) drop out of
//! the iteration entirely. Stopping follows the usual scaled residual rule:
//! `r_pri = ||(D beta - a1; T beta - a2)||` against
//! `sqrt(m)*eps_abs + eps_rel*max(||A beta||, ||a||)`, and
//! `r_dual = ||rho1*D^T (a1 - a1_prev) + rho2*T^T (a2 - a2_prev)||` against
//! `sqrt(n)*eps_abs + eps_rel*||rho1*D^T u1 + rho2*T^T u2||`.

use crate::error::{Error, Result};
use crate::solvers::{norm2, soft_threshold_scalar, SolveResult, TraceRow};
use crate::sparse::{conjugate_gradient, factorize, SparseMatrix, SpdOperator};

/// How the beta-update linear system is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Matrix-free conjugate gradient, warm-started from the previous beta.
    #[default]
    Cg,
    /// Sparse LDL^T factorization computed once and reused every iteration.
    Factorization,
}

/// ADMM parameters. The defaults match the usual practice for these
/// problems: unit step weights, 1e-3 tolerances, and a generous iteration
/// cap.
#[derive(Debug, Clone)]
pub struct AdmmConfig {
    pub rho1: f64,
    pub rho2: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    pub backend: Backend,
    /// Relative tolerance for the inner CG solves.
    pub cg_tol: f64,
    /// Inner CG iteration cap; `None` means `10 * n`.
    pub cg_max_iter: Option<usize>,
    /// Record one [`TraceRow`] per iteration in the result.
    pub collect_trace: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            rho1: 1.0,
            rho2: 1.0,
            eps_abs: 1e-3,
            eps_rel: 1e-3,
            max_iter: 10_000,
            backend: Backend::Cg,
            cg_tol: 1e-8,
            cg_max_iter: None,
            collect_trace: false,
        }
    }
}

impl AdmmConfig {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("rho1", self.rho1), ("rho2", self.rho2)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        for (name, v) in [("eps_abs", self.eps_abs), ("eps_rel", self.eps_rel)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "max_iter must be at least 1".to_string(),
            ));
        }
        if !self.cg_tol.is_finite() || self.cg_tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "cg_tol must be finite and positive, got {}",
                self.cg_tol
            )));
        }
        Ok(())
    }
}

/// Iterate state, exposed so sweeps over a penalty grid can warm-start each
/// solve from the previous solution.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub beta: Vec<f64>,
    pub alpha1: Vec<f64>,
    pub u1: Vec<f64>,
    pub alpha2: Vec<f64>,
    pub u2: Vec<f64>,
}

impl AdmmState {
    /// Cold start: `beta = y`, auxiliaries and duals at zero.
    pub fn cold(y: &[f64], m1: usize, m2: usize) -> Self {
        AdmmState {
            beta: y.to_vec(),
            alpha1: vec![0.0; m1],
            u1: vec![0.0; m1],
            alpha2: vec![0.0; m2],
            u2: vec![0.0; m2],
        }
    }
}

fn check_weight(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "{name} must be finite and nonnegative, got {v}"
        )));
    }
    Ok(())
}

/// Solves the two-block problem with a cold start.
pub fn admm_solve(
    y: &[f64],
    d: &SparseMatrix,
    t: &SparseMatrix,
    lambda_f: f64,
    lambda_t: f64,
    cfg: &AdmmConfig,
) -> Result<SolveResult> {
    admm_solve_with(y, d, t, lambda_f, lambda_t, cfg, None).map(|(res, _)| res)
}

/// Solves the two-block problem, optionally warm-started from `state`.
///
/// Returns the result and the final iterate state for reuse. Reaching
/// `max_iter` is not an error: the current iterate is returned with
/// `converged = false`. Non-finite intermediates abort.
pub fn admm_solve_with(
    y: &[f64],
    d: &SparseMatrix,
    t: &SparseMatrix,
    lambda_f: f64,
    lambda_t: f64,
    cfg: &AdmmConfig,
    state: Option<AdmmState>,
) -> Result<(SolveResult, AdmmState)> {
    cfg.validate()?;
    check_weight("lambda_f", lambda_f)?;
    check_weight("lambda_t", lambda_t)?;
    let n = y.len();
    if n == 0 {
        return Err(Error::InvalidParameter("signal is empty".to_string()));
    }
    for (name, op) in [("fused operator", d), ("trend operator", t)] {
        if op.ncols() != n {
            let _ = name;
            return Err(Error::DimensionMismatch {
                context: "admm operator width",
                expected: n,
                got: op.ncols(),
            });
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("admm input is not finite"));
    }

    let use1 = lambda_f > 0.0 && d.nrows() > 0;
    let use2 = lambda_t > 0.0 && t.nrows() > 0;
    let (m1, m2) = (d.nrows(), t.nrows());
    let m_active = (if use1 { m1 } else { 0 }) + (if use2 { m2 } else { 0 });

    let mut terms = Vec::new();
    if use1 {
        terms.push((cfg.rho1, d.clone()));
    }
    if use2 {
        terms.push((cfg.rho2, t.clone()));
    }
    let system = SpdOperator::new(n, 1.0, terms)?;
    let direct = match cfg.backend {
        Backend::Cg => None,
        Backend::Factorization => Some(factorize(&system)?),
    };
    let cg_cap = cfg.cg_max_iter.unwrap_or(10 * n).max(1);
    // The inner solves must be enough more accurate than the outer stopping
    // rule that their error never floors the residuals.
    let cg_tol = cfg.cg_tol.min(1e-2 * cfg.eps_abs).max(1e-14);

    let mut st = state.unwrap_or_else(|| AdmmState::cold(y, m1, m2));
    if st.beta.len() != n || st.alpha1.len() != m1 || st.alpha2.len() != m2 {
        return Err(Error::DimensionMismatch {
            context: "admm warm-start state",
            expected: n,
            got: st.beta.len(),
        });
    }

    let mut iterations = 0;
    let mut converged = false;
    let mut r_pri = f64::INFINITY;
    let mut r_dual = f64::INFINITY;
    let mut rhs = vec![0.0; n];
    let mut scratch_n = vec![0.0; n];
    let mut trace = Vec::new();

    for it in 1..=cfg.max_iter {
        iterations = it;

        // beta update: (I + rho1 D^T D + rho2 T^T T) beta = rhs.
        rhs.copy_from_slice(y);
        if use1 {
            let sum: Vec<f64> = st.alpha1.iter().zip(&st.u1).map(|(a, u)| a + u).collect();
            d.matvec_transpose_into(&sum, &mut scratch_n);
            for i in 0..n {
                rhs[i] += cfg.rho1 * scratch_n[i];
            }
        }
        if use2 {
            let sum: Vec<f64> = st.alpha2.iter().zip(&st.u2).map(|(a, u)| a + u).collect();
            t.matvec_transpose_into(&sum, &mut scratch_n);
            for i in 0..n {
                rhs[i] += cfg.rho2 * scratch_n[i];
            }
        }
        match &direct {
            Some(f) => st.beta = f.solve(&rhs)?,
            None => {
                let cg = conjugate_gradient(&system, &rhs, &st.beta, cg_tol, cg_cap)?;
                st.beta = cg.x;
            }
        }
        if st.beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure("admm beta is not finite"));
        }

        // Block updates, residuals, and tolerance ingredients.
        let mut r_pri_sq = 0.0;
        let mut ax_sq = 0.0;
        let mut alpha_sq = 0.0;
        let mut dual_change = vec![0.0; n];
        let mut dual_anchor = vec![0.0; n];

        let mut update_block = |op: &SparseMatrix,
                                rho: f64,
                                lambda: f64,
                                alpha: &mut Vec<f64>,
                                u: &mut Vec<f64>,
                                beta: &[f64],
                                dual_change: &mut [f64],
                                dual_anchor: &mut [f64]|
         -> Result<()> {
            let ax = op.matvec(beta)?;
            let thresh = lambda / rho;
            let mut delta_alpha = vec![0.0; ax.len()];
            for i in 0..ax.len() {
                let next = soft_threshold_scalar(ax[i] - u[i], thresh);
                delta_alpha[i] = next - alpha[i];
                alpha[i] = next;
                u[i] += alpha[i] - ax[i];
                let gap = ax[i] - alpha[i];
                r_pri_sq += gap * gap;
                ax_sq += ax[i] * ax[i];
                alpha_sq += alpha[i] * alpha[i];
            }
            let back = op.matvec_transpose(&delta_alpha)?;
            for i in 0..back.len() {
                dual_change[i] += rho * back[i];
            }
            let anchor = op.matvec_transpose(u)?;
            for i in 0..anchor.len() {
                dual_anchor[i] += rho * anchor[i];
            }
            Ok(())
        };

        if use1 {
            update_block(
                d,
                cfg.rho1,
                lambda_f,
                &mut st.alpha1,
                &mut st.u1,
                &st.beta,
                &mut dual_change,
                &mut dual_anchor,
            )?;
        }
        if use2 {
            update_block(
                t,
                cfg.rho2,
                lambda_t,
                &mut st.alpha2,
                &mut st.u2,
                &st.beta,
                &mut dual_change,
                &mut dual_anchor,
            )?;
        }

        r_pri = r_pri_sq.sqrt();
        r_dual = norm2(&dual_change);
        if !r_pri.is_finite() || !r_dual.is_finite() {
            return Err(Error::NumericalFailure("admm residual is not finite"));
        }
        let eps_pri = (m_active as f64).sqrt() * cfg.eps_abs
            + cfg.eps_rel * ax_sq.sqrt().max(alpha_sq.sqrt());
        let eps_dual = (n as f64).sqrt() * cfg.eps_abs + cfg.eps_rel * norm2(&dual_anchor);

        if cfg.collect_trace {
            let objective = admm_objective(y, &st.beta, d, t, lambda_f, lambda_t)?;
            trace.push(TraceRow {
                iter: it,
                r_pri,
                r_dual,
                objective,
            });
        }

        if r_pri <= eps_pri && r_dual <= eps_dual {
            converged = true;
            break;
        }
    }

    let objective = admm_objective(y, &st.beta, d, t, lambda_f, lambda_t)?;
    let result = SolveResult {
        beta: st.beta.clone(),
        iterations,
        primal_residual: r_pri,
        dual_residual: r_dual,
        objective,
        converged,
        trace,
    };
    Ok((result, st))
}

/// Solves the same problem for every weight pair in `lambdas`, warm-starting
/// each solve from the previous solution. Pairs are `(lambda_f, lambda_t)`;
/// ordering them from small to large keeps consecutive solutions close and
/// the restarts cheap.
pub fn admm_lambda_sweep(
    y: &[f64],
    d: &SparseMatrix,
    t: &SparseMatrix,
    lambdas: &[(f64, f64)],
    cfg: &AdmmConfig,
) -> Result<Vec<SolveResult>> {
    let mut out = Vec::with_capacity(lambdas.len());
    let mut state: Option<AdmmState> = None;
    for &(lf, lt) in lambdas {
        let (res, next) = admm_solve_with(y, d, t, lf, lt, cfg, state.take())?;
        out.push(res);
        state = Some(next);
    }
    Ok(out)
}

fn admm_objective(
    y: &[f64],
    beta: &[f64],
    d: &SparseMatrix,
    t: &SparseMatrix,
    lambda_f: f64,
    lambda_t: f64,
) -> Result<f64> {
    let fit: f64 = y
        .iter()
        .zip(beta.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let mut obj = 0.5 * fit;
    if lambda_f > 0.0 && d.nrows() > 0 {
        obj += lambda_f * d.matvec(beta)?.iter().map(|v| v.abs()).sum::<f64>();
    }
    if lambda_t > 0.0 && t.nrows() > 0 {
        obj += lambda_t * t.matvec(beta)?.iter().map(|v| v.abs()).sum::<f64>();
    }
    Ok(obj)
}
