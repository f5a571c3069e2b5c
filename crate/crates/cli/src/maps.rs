//! On-disk form of a deconvolved map (or any 2-D grid): an 8-byte header of
//! two little-endian u32 dimensions (rows, cols) followed by row-major
//! little-endian f32 values. A CSV twin exists for ad-hoc inspection.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub fn write_map_bin(path: &Path, values: &[f64], h: usize, w: usize) -> Result<()> {
    if values.len() != h * w {
        bail!("map length {} != {h}x{w}", values.len());
    }
    let mut out = Vec::with_capacity(8 + values.len() * 4);
    out.extend_from_slice(&(h as u32).to_le_bytes());
    out.extend_from_slice(&(w as u32).to_le_bytes());
    for &v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_map_bin(path: &Path) -> Result<(Vec<f64>, usize, usize)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.len() < 8 {
        bail!("{}: too short for a map file", path.display());
    }
    let h = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let expect = 8 + h * w * 4;
    if bytes.len() != expect {
        bail!(
            "{}: {} bytes, expected {expect} for a {h}x{w} map",
            path.display(),
            bytes.len()
        );
    }
    let values = bytes[8..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok((values, h, w))
}

pub fn write_map_csv(path: &Path, values: &[f64], h: usize, w: usize) -> Result<()> {
    if values.len() != h * w {
        bail!("map length {} != {h}x{w}", values.len());
    }
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = std::io::BufWriter::new(file);
    for r in 0..h {
        let row = &values[r * w..(r + 1) * w];
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                write!(out, ",")?;
            }
            write!(out, "{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
