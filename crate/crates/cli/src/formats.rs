//! On-disk representations: the GRID1 text format for exact grid dumps
//! and binary PGM for quick visual inspection.
//!
//! GRID1 is plain text. Line one is `GRID1 <n_freq> <n_frames>`, followed
//! by one line per frequency bin (bin 0 first) holding `n_frames`
//! space-separated values. Values use Rust's shortest round-trip float
//! formatting, so write followed by parse reproduces every bit.

use std::fs;
use std::path::Path;

use meledit_core::{FrameMask, MelGrid};

use crate::{CliError, Result};

pub fn grid_to_string(grid: &MelGrid) -> String {
    let (n_freq, n_frames) = grid.shape();
    let mut out = format!("GRID1 {n_freq} {n_frames}\n");
    for f in 0..n_freq {
        let mut line = String::new();
        for tau in 0..n_frames {
            if tau > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{}", grid.get(f, tau)));
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn parse_grid(text: &str) -> Result<MelGrid> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Config("empty grid file".into()))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("GRID1") {
        return Err(CliError::Config("grid file must start with GRID1".into()));
    }
    let n_freq: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::Config("bad GRID1 header: missing n_freq".into()))?;
    let n_frames: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| CliError::Config("bad GRID1 header: missing n_frames".into()))?;
    if parts.next().is_some() {
        return Err(CliError::Config("bad GRID1 header: trailing tokens".into()));
    }

    let mut values = vec![0.0_f64; n_freq * n_frames];
    for f in 0..n_freq {
        let line = lines.next().ok_or_else(|| {
            CliError::Config(format!("grid file ends early: expected {n_freq} rows"))
        })?;
        let mut count = 0;
        for (tau, tok) in line.split_whitespace().enumerate() {
            if tau >= n_frames {
                return Err(CliError::Config(format!(
                    "grid row {f}: more than {n_frames} values"
                )));
            }
            let v: f64 = tok.parse().map_err(|_| {
                CliError::Config(format!("grid row {f}: bad value {tok:?}"))
            })?;
            values[tau * n_freq + f] = v;
            count += 1;
        }
        if count != n_frames {
            return Err(CliError::Config(format!(
                "grid row {f}: expected {n_frames} values, found {count}"
            )));
        }
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(CliError::Config("grid file has trailing content".into()));
    }
    MelGrid::new(n_freq, n_frames, values)
        .map_err(|e| CliError::Config(format!("grid file invalid: {e}")))
}

pub fn write_grid(path: &Path, grid: &MelGrid) -> Result<()> {
    fs::write(path, grid_to_string(grid))?;
    Ok(())
}

pub fn read_grid(path: &Path) -> Result<MelGrid> {
    let text = fs::read_to_string(path)?;
    parse_grid(&text)
}

/// Masks are persisted as one-bin grids so they share the GRID1 tooling.
pub fn mask_to_grid(mask: &FrameMask) -> MelGrid {
    MelGrid::new(1, mask.len(), mask.weights().to_vec())
        .expect("mask weights are finite by construction")
}

/// 8-bit binary PGM, min-max normalized per grid. Frequency bin 0 is the
/// bottom pixel row. The header comment records the original value range,
/// so the dump is invertible at 8-bit precision; a constant grid maps to
/// all-zero pixels.
pub fn pgm_bytes(grid: &MelGrid) -> Vec<u8> {
    let (n_freq, n_frames) = grid.shape();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in grid.values() {
        min = min.min(v);
        max = max.max(v);
    }
    if grid.values().is_empty() {
        min = 0.0;
        max = 0.0;
    }
    let mut out = Vec::new();
    out.extend_from_slice(format!("P5\n# min {min} max {max}\n{n_frames} {n_freq}\n255\n").as_bytes());
    let span = max - min;
    for f in (0..n_freq).rev() {
        for tau in 0..n_frames {
            let p = if span > 0.0 {
                ((grid.get(f, tau) - min) / span * 255.0).round() as u8
            } else {
                0
            };
            out.push(p);
        }
    }
    out
}

pub fn write_pgm(path: &Path, grid: &MelGrid) -> Result<()> {
    fs::write(path, pgm_bytes(grid))?;
    Ok(())
}

/// Reads back a PGM written by [`pgm_bytes`], undoing the normalization
/// with the min/max from the header comment.
pub fn parse_pgm(bytes: &[u8]) -> Result<MelGrid> {
    let bad = |msg: &str| CliError::Config(format!("pgm: {msg}"));
    let header_end = find_header_end(bytes).ok_or_else(|| bad("truncated header"))?;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| bad("header is not utf-8"))?;
    let mut lines = header.lines();
    if lines.next() != Some("P5") {
        return Err(bad("not a binary PGM"));
    }
    let comment = lines.next().ok_or_else(|| bad("missing range comment"))?;
    let mut ctok = comment.split_whitespace();
    if ctok.next() != Some("#") || ctok.next() != Some("min") {
        return Err(bad("missing min/max comment"));
    }
    let min: f64 = ctok
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("bad min"))?;
    if ctok.next() != Some("max") {
        return Err(bad("missing max"));
    }
    let max: f64 = ctok
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("bad max"))?;
    let dims = lines.next().ok_or_else(|| bad("missing dimensions"))?;
    let mut dtok = dims.split_whitespace();
    let n_frames: usize = dtok
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("bad width"))?;
    let n_freq: usize = dtok
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("bad height"))?;
    if lines.next() != Some("255") {
        return Err(bad("maxval must be 255"));
    }

    let pixels = &bytes[header_end..];
    if pixels.len() != n_freq * n_frames {
        return Err(bad("pixel count does not match dimensions"));
    }
    let span = max - min;
    let mut values = vec![0.0_f64; n_freq * n_frames];
    for (row, chunk) in pixels.chunks(n_frames.max(1)).enumerate() {
        let f = n_freq - 1 - row;
        for (tau, &p) in chunk.iter().enumerate() {
            values[tau * n_freq + f] = min + p as f64 / 255.0 * span;
        }
    }
    MelGrid::new(n_freq, n_frames, values)
        .map_err(|e| CliError::Config(format!("pgm content invalid: {e}")))
}

/// Byte offset just past the `255\n` maxval line: four `\n`-terminated
/// header lines.
fn find_header_end(bytes: &[u8]) -> Option<usize> {
    let mut newlines = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'\n' {
            newlines += 1;
            if newlines == 4 {
                return Some(i + 1);
            }
        }
    }
    None
}
