//! Conjugate gradient for the SPD systems arising in the ADMM beta update.

use crate::error::{Error, Result};
use crate::sparse::SpdOperator;

/// Guard against division by zero when inputs are identically zero.
const EPS_FLOOR: f64 = 1e-12;

/// Outcome of a conjugate-gradient solve.
#[derive(Debug, Clone)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `M x = b` by conjugate gradient, warm-started from `x0`.
///
/// Stops when the residual satisfies `||b - M x|| <= tol * max(||b||, 1e-12)`.
/// Because the recurred residual can drift from the true one, convergence is
/// confirmed against a freshly computed residual before returning; a false
/// alarm restarts the recursion from the true residual. If `max_iter` is
/// exhausted the current iterate is returned with `converged = false`.
/// Non-finite intermediates abort with an error.
pub fn conjugate_gradient(
    m: &SpdOperator,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgResult> {
    let n = m.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            context: "cg rhs",
            expected: n,
            got: b.len(),
        });
    }
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            context: "cg warm start",
            expected: n,
            got: x0.len(),
        });
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "cg tolerance must be finite and positive, got {tol}"
        )));
    }

    let b_scale = norm(b).max(EPS_FLOOR);
    let target = tol * b_scale;

    let mut x = x0.to_vec();
    let mx = m.apply(&x)?;
    let mut r: Vec<f64> = b.iter().zip(mx.iter()).map(|(bi, mi)| bi - mi).collect();
    let mut rs = dot(&r, &r);
    if !rs.is_finite() {
        return Err(Error::NumericalFailure("cg residual is not finite"));
    }
    if rs.sqrt() <= target {
        return Ok(CgResult {
            x,
            iterations: 0,
            converged: true,
        });
    }
    let mut p = r.clone();

    for it in 1..=max_iter {
        let mp = m.apply(&p)?;
        let pap = dot(&p, &mp);
        if !pap.is_finite() {
            return Err(Error::NumericalFailure("cg curvature is not finite"));
        }
        if pap <= 0.0 {
            // A genuinely SPD operator cannot produce this unless p has
            // collapsed to numerical zero.
            return Err(Error::NumericalFailure("cg lost positive definiteness"));
        }
        let alpha = rs / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * mp[i];
        }
        let mut rs_new = dot(&r, &r);
        if !rs_new.is_finite() {
            return Err(Error::NumericalFailure("cg residual is not finite"));
        }
        if rs_new.sqrt() <= target {
            // Confirm with the true residual before declaring convergence.
            let mx = m.apply(&x)?;
            let r_true: Vec<f64> = b.iter().zip(mx.iter()).map(|(bi, mi)| bi - mi).collect();
            let rs_true = dot(&r_true, &r_true);
            if rs_true.sqrt() <= target {
                return Ok(CgResult {
                    x,
                    iterations: it,
                    converged: true,
                });
            }
            // Drift: restart the recursion from the true residual.
            r = r_true;
            rs_new = rs_true;
            p.copy_from_slice(&r);
            rs = rs_new;
            continue;
        }
        let beta = rs_new / rs;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_new;
    }

    Ok(CgResult {
        x,
        iterations: max_iter,
        converged: false,
    })
}
