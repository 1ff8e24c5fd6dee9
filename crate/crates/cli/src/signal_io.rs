//! Signal file I/O: CSV (one value per line) and PGM images, detected by
//! content. Output is always written in the input's format.

use std::fs;
use std::path::Path;

use crate::pgm::{self, PgmMeta};

/// How a signal arrived on disk, so it can leave the same way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SignalFormat {
    Csv,
    Pgm(PgmMeta),
}

impl SignalFormat {
    /// `(rows, columns)` when the signal is an image.
    pub fn image_dims(&self) -> Option<(usize, usize)> {
        match self {
            SignalFormat::Csv => None,
            SignalFormat::Pgm(meta) => Some((meta.height, meta.width)),
        }
    }
}

/// Reads a signal and remembers its format. CSV values stay in file order
/// (column-major for lattices); image pixels are rearranged into the
/// column-major vertex order of an `height x width` lattice.
pub fn read_signal(path: &Path) -> Result<(Vec<f64>, SignalFormat), String> {
    let bytes =
        fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    if pgm::looks_like_pgm(&bytes) {
        let (meta, pixels) = pgm::parse(&bytes)?;
        let reals = pgm::to_reals(&pixels, meta.maxval);
        let values = row_major_to_column_major(&reals, meta.height, meta.width);
        return Ok((values, SignalFormat::Pgm(meta)));
    }
    let text = String::from_utf8(bytes)
        .map_err(|_| format!("{} is neither a PGM image nor text", path.display()))?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let v: f64 = trimmed.parse().map_err(|_| {
            format!(
                "{} line {}: cannot parse {trimmed:?} as a number",
                path.display(),
                lineno + 1
            )
        })?;
        if !v.is_finite() {
            return Err(format!(
                "{} line {}: value {v} is not finite",
                path.display(),
                lineno + 1
            ));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(format!("{} contains no values", path.display()));
    }
    Ok((values, SignalFormat::Csv))
}

/// Writes a signal in the given format: CSV at 17 significant digits, or
/// pixels clamped to `[0, 1]` and scaled back to the image's sample range.
pub fn write_signal(path: &Path, values: &[f64], format: &SignalFormat) -> Result<(), String> {
    let bytes = match format {
        SignalFormat::Csv => {
            let mut s = String::with_capacity(values.len() * 24);
            for v in values {
                s.push_str(&format!("{v:.16e}\n"));
            }
            s.into_bytes()
        }
        SignalFormat::Pgm(meta) => {
            let row_major = column_major_to_row_major(values, meta.height, meta.width);
            pgm::render(meta, &pgm::from_reals(&row_major, meta.maxval))
        }
    };
    fs::write(path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Raster order (row by row) to lattice order (column by column).
fn row_major_to_column_major(raster: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; raster.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = raster[r * cols + c];
        }
    }
    out
}

/// Lattice order back to raster order.
fn column_major_to_row_major(values: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = values[c * rows + r];
        }
    }
    out
}
