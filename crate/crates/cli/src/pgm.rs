//! Minimal PGM (portable graymap) reader and writer.
//!
//! Both the ASCII (`P2`) and binary (`P5`) variants are supported, with
//! `maxval` up to 65535 (two bytes per sample, big-endian, in `P5`).
//! Pixels map to reals in `[0, 1]` by dividing by `maxval`; writing rounds
//! `clamp(v, 0, 1) * maxval` back to integers, so a read-write round trip
//! reproduces the pixel data exactly.

/// Shape and encoding of a graymap, kept so output can match input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmMeta {
    pub binary: bool,
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
}

/// True when the buffer starts with a PGM magic number.
pub fn looks_like_pgm(bytes: &[u8]) -> bool {
    bytes.starts_with(b"P2") || bytes.starts_with(b"P5")
}

/// Header tokenizer: skips whitespace and `#` comments, returns ASCII
/// tokens and the index just past them.
struct Tokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(bytes: &'a [u8], pos: usize) -> Self {
        Tokens { bytes, pos }
    }

    fn skip_filler(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn next_number(&mut self, what: &str) -> Result<u64, String> {
        self.skip_filler();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(format!("pgm: expected {what}, found no digits"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("digits are valid utf-8")
            .parse::<u64>()
            .map_err(|_| format!("pgm: {what} out of range"))
    }
}

/// Parses a PGM document into its metadata and raw pixel samples
/// (row-major, top row first).
pub fn parse(bytes: &[u8]) -> Result<(PgmMeta, Vec<u16>), String> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        Some(magic) => {
            return Err(format!(
                "pgm: unsupported magic {:?} (only P2 and P5)",
                String::from_utf8_lossy(magic)
            ))
        }
        None => return Err("pgm: truncated header".to_string()),
    };
    let mut tok = Tokens::new(bytes, 2);
    let width = tok.next_number("width")? as usize;
    let height = tok.next_number("height")? as usize;
    let maxval = tok.next_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(format!("pgm: degenerate image {width}x{height}"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format!("pgm: maxval {maxval} outside 1..=65535"));
    }
    let maxval = maxval as u16;
    let count = width
        .checked_mul(height)
        .ok_or_else(|| "pgm: image size overflows".to_string())?;

    let mut pixels = Vec::with_capacity(count);
    if binary {
        // A single whitespace byte separates the header from the samples.
        if tok.pos >= bytes.len() || !bytes[tok.pos].is_ascii_whitespace() {
            return Err("pgm: missing separator after maxval".to_string());
        }
        let data = &bytes[tok.pos + 1..];
        let per = if maxval > 255 { 2 } else { 1 };
        if data.len() < count * per {
            return Err(format!(
                "pgm: expected {} sample bytes, found {}",
                count * per,
                data.len()
            ));
        }
        for i in 0..count {
            let v = if per == 2 {
                u16::from_be_bytes([data[2 * i], data[2 * i + 1]])
            } else {
                data[i] as u16
            };
            pixels.push(v);
        }
    } else {
        for _ in 0..count {
            pixels.push(tok.next_number("pixel")? as u16);
        }
        tok.skip_filler();
        if tok.pos != bytes.len() {
            return Err("pgm: trailing data after pixels".to_string());
        }
    }
    for &p in &pixels {
        if p > maxval {
            return Err(format!("pgm: sample {p} exceeds maxval {maxval}"));
        }
    }
    Ok((
        PgmMeta {
            binary,
            width,
            height,
            maxval,
        },
        pixels,
    ))
}

/// Serializes pixels (row-major) in the encoding named by `meta`, with a
/// canonical header so equal inputs give byte-identical documents.
pub fn render(meta: &PgmMeta, pixels: &[u16]) -> Vec<u8> {
    assert_eq!(pixels.len(), meta.width * meta.height, "pixel count");
    let magic = if meta.binary { "P5" } else { "P2" };
    let mut out = format!("{magic}\n{} {}\n{}\n", meta.width, meta.height, meta.maxval)
        .into_bytes();
    if meta.binary {
        if meta.maxval > 255 {
            for &p in pixels {
                out.extend_from_slice(&p.to_be_bytes());
            }
        } else {
            out.extend(pixels.iter().map(|&p| p as u8));
        }
    } else {
        for &p in pixels {
            out.extend_from_slice(p.to_string().as_bytes());
            out.push(b'\n');
        }
    }
    out
}

/// Pixels to reals in `[0, 1]`.
pub fn to_reals(pixels: &[u16], maxval: u16) -> Vec<f64> {
    pixels
        .iter()
        .map(|&p| p as f64 / maxval as f64)
        .collect()
}

/// Reals to pixels: clamp to `[0, 1]`, scale, round to nearest.
pub fn from_reals(values: &[f64], maxval: u16) -> Vec<u16> {
    values
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * maxval as f64).round() as u16)
        .collect()
}
