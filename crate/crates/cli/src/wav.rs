//! Minimal RIFF/WAVE support: 16-bit PCM little-endian. Writing is always
//! mono; reading averages multi-channel files down to mono.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use auralis_core::dsp::AudioBuffer;

/// Writes `buf` as mono 16-bit PCM. Samples are clamped to [-1, 1] before
/// quantization.
pub fn write_wav(path: &Path, buf: &AudioBuffer) -> Result<()> {
    let n = buf.samples.len();
    let data_len = (n * 2) as u32;
    let sr = buf.sample_rate;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&sr.to_le_bytes());
    out.extend_from_slice(&(sr * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &buf.samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Reads a 16-bit PCM WAV file; multi-channel content is averaged to mono.
pub fn read_wav(path: &Path) -> Result<AudioBuffer> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.len() < 44 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        bail!("{}: not a RIFF/WAVE file", path.display());
    }
    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    let mut at = 12;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let len = u32_at(&bytes, at + 4) as usize;
        let body_end = (at + 8 + len).min(bytes.len());
        let body = &bytes[at + 8..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    bail!("{}: truncated fmt chunk", path.display());
                }
                fmt = Some((
                    u16_at(body, 0),
                    u16_at(body, 2),
                    u32_at(body, 4),
                    u16_at(body, 14),
                ));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        at += 8 + len + (len & 1); // chunks are word-aligned
    }
    let (format, channels, rate, bits) = fmt.context("missing fmt chunk")?;
    let data = data.context("missing data chunk")?;
    if format != 1 || bits != 16 {
        bail!(
            "{}: unsupported encoding (format {format}, {bits} bits); only 16-bit PCM",
            path.display()
        );
    }
    if channels == 0 {
        bail!("{}: zero channels", path.display());
    }
    let ch = channels as usize;
    let frames = data.len() / (2 * ch);
    let mut samples = Vec::with_capacity(frames);
    for f in 0..frames {
        let mut acc = 0.0;
        for c in 0..ch {
            let at = (f * ch + c) * 2;
            let v = i16::from_le_bytes([data[at], data[at + 1]]);
            // Mirror the writer's scale so a round trip only loses the
            // rounding step; -32768 clamps to -1.
            acc += (v as f64 / 32767.0).max(-1.0);
        }
        samples.push(acc / ch as f64);
    }
    Ok(AudioBuffer::new(samples, rate)?)
}
