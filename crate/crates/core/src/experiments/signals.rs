//! Synthetic grid signals for experiments: smooth surfaces, a chessboard,
//! Gaussian noise, and line corruption.

use crate::error::{Error, Result};
use crate::graph::LatticeSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// A signal laid out on a lattice, optionally paired with the noise-free
/// surface it was sampled from.
#[derive(Debug, Clone)]
pub struct GridSignal {
    pub spec: LatticeSpec,
    /// Observed values, one per vertex in lattice order.
    pub values: Vec<f64>,
    /// Ground truth when known, for error measurement.
    pub truth: Option<Vec<f64>>,
}

impl GridSignal {
    /// Mean squared error of `values` against the stored truth.
    pub fn mse_to_truth(&self) -> Result<f64> {
        let truth = self.truth.as_ref().ok_or(Error::InvalidParameter(
            "signal has no ground truth".to_string(),
        ))?;
        mse(&self.values, truth)
    }
}

/// Mean squared error between two equal-length vectors.
pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "mse operands",
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidParameter("mse of empty vectors".to_string()));
    }
    let sum: f64 = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.len() as f64)
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Samples `f` on a `d x d` grid at coordinates `x_i = i / d` for
/// `i = 0, ..., d-1` along each axis. The first argument varies down a
/// column, the second across a row, matching the column-major vertex order.
fn sample_surface(d: usize, f: impl Fn(f64, f64) -> f64) -> Result<GridSignal> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid side must be at least 2, got {d}"
        )));
    }
    let spec = LatticeSpec::new(d, d)?;
    let mut values = vec![0.0; spec.n()];
    for k in 0..d {
        let x2 = k as f64 / d as f64;
        for l in 0..d {
            let x1 = l as f64 / d as f64;
            values[spec.vertex(l, k)] = f(x1, x2);
        }
    }
    Ok(GridSignal {
        spec,
        truth: Some(values.clone()),
        values,
    })
}

/// Smooth sigmoid bump: `(sigmoid(16*x1 - 8) + sigmoid(16*x2 - 8)) / 2`,
/// a surface that transitions from 0 to 1 through the grid center.
pub fn gen_bisigmoid(d: usize) -> Result<GridSignal> {
    sample_surface(d, |x1, x2| {
        0.5 * (sigmoid(16.0 * x1 - 8.0) + sigmoid(16.0 * x2 - 8.0))
    })
}

/// Cubic surface `((2*x1 - 1)^3 + (2*x2 - 1)^3) / 2 + 2`, inflecting at the
/// grid center where it equals 2.
pub fn gen_bicubic(d: usize) -> Result<GridSignal> {
    sample_surface(d, |x1, x2| {
        let a = 2.0 * x1 - 1.0;
        let b = 2.0 * x2 - 1.0;
        0.5 * (a * a * a + b * b * b) + 2.0
    })
}

/// Affine ramp `x1 + x2`; any curvature penalty should leave it unchanged.
pub fn gen_linear(d: usize) -> Result<GridSignal> {
    sample_surface(d, |x1, x2| x1 + x2)
}

/// Adds iid Gaussian noise with the given variance on top of the ground
/// truth (the current values when no truth is stored). A variance of zero
/// restores the truth exactly; the seed fixes the noise draw.
pub fn add_noise(signal: &GridSignal, variance: f64, seed: u64) -> Result<GridSignal> {
    if !variance.is_finite() || variance < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be finite and nonnegative, got {variance}"
        )));
    }
    let base = signal.truth.as_ref().unwrap_or(&signal.values);
    let values = if variance == 0.0 {
        base.clone()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, variance.sqrt())
            .map_err(|_| Error::InvalidParameter("bad noise distribution".to_string()))?;
        base.iter().map(|v| v + normal.sample(&mut rng)).collect()
    };
    Ok(GridSignal {
        spec: signal.spec,
        values,
        truth: Some(base.clone()),
    })
}

/// Chessboard of `squares x squares` alternating 0/1 cells on a `d x d`
/// grid; the top-left cell is 0. `squares` must divide `d`.
pub fn gen_chessboard(d: usize, squares: usize) -> Result<GridSignal> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid side must be at least 2, got {d}"
        )));
    }
    if squares == 0 || d % squares != 0 {
        return Err(Error::InvalidParameter(format!(
            "squares must divide the grid side: {squares} does not divide {d}"
        )));
    }
    let cell = d / squares;
    let spec = LatticeSpec::new(d, d)?;
    let mut values = vec![0.0; spec.n()];
    for k in 0..d {
        for l in 0..d {
            values[spec.vertex(l, k)] = ((l / cell + k / cell) % 2) as f64;
        }
    }
    Ok(GridSignal {
        spec,
        truth: Some(values.clone()),
        values,
    })
}

/// Overwrites whole rows and columns of the observed values with `fill`,
/// keeping the ground truth intact. Empty index lists leave the signal
/// unchanged.
pub fn corrupt_lines(
    signal: &GridSignal,
    line_rows: &[usize],
    line_cols: &[usize],
    fill: f64,
) -> Result<GridSignal> {
    if !fill.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "fill value must be finite, got {fill}"
        )));
    }
    let (n1, n2) = (signal.spec.n1, signal.spec.n2);
    for &r in line_rows {
        if r >= n1 {
            return Err(Error::InvalidParameter(format!(
                "row {r} out of range for {n1} rows"
            )));
        }
    }
    for &c in line_cols {
        if c >= n2 {
            return Err(Error::InvalidParameter(format!(
                "column {c} out of range for {n2} columns"
            )));
        }
    }
    let mut values = signal.values.clone();
    for &r in line_rows {
        for k in 0..n2 {
            values[signal.spec.vertex(r, k)] = fill;
        }
    }
    for &c in line_cols {
        for l in 0..n1 {
            values[signal.spec.vertex(l, c)] = fill;
        }
    }
    Ok(GridSignal {
        spec: signal.spec,
        values,
        truth: signal.truth.clone(),
    })
}
