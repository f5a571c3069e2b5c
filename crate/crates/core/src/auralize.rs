//! Turning a deconvolved map back into sound: reapply the original phase and
//! inverse-transform.

use crate::deconv::{DeconvolvedMap, DeconvRequest};
use crate::dsp::{istft_grid, AudioBuffer};
use crate::error::{Error, Result};

/// STFT configuration needed to invert a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftParams {
    pub n_fft: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl Default for StftParams {
    fn default() -> Self {
        StftParams {
            n_fft: crate::dsp::DEFAULT_N_FFT,
            hop: crate::dsp::DEFAULT_HOP,
            sample_rate: crate::dsp::DEFAULT_SAMPLE_RATE,
        }
    }
}

/// One auralised feature plus bookkeeping.
#[derive(Debug, Clone)]
pub struct AuralisationResult {
    pub audio: AudioBuffer,
    pub source: DeconvRequest,
    /// Output energy (before normalization) over original-signal energy.
    pub energy_ratio: f64,
}

/// Forms the complex grid `map * e^{i phase}` and inverse-transforms it.
/// Signed map values pass straight through (a negative value is a pi phase
/// flip). If the reconstruction peaks above 1, it is scaled to 0.9.
pub fn auralise(map: &DeconvolvedMap, phase: &[f64], params: &StftParams) -> Result<AudioBuffer> {
    let n_bins = params.n_fft / 2 + 1;
    if map.h != n_bins {
        return Err(Error::InvalidArgument(alloc::format!(
            "map has {} rows, expected {n_bins} bins for n_fft {}",
            map.h,
            params.n_fft
        )));
    }
    if phase.len() != map.values.len() {
        return Err(Error::InvalidArgument(alloc::format!(
            "phase length {} does not match map {}x{}",
            phase.len(),
            map.h,
            map.w
        )));
    }
    let mut audio = istft_grid(
        &map.values,
        phase,
        map.h,
        map.w,
        params.n_fft,
        params.hop,
        params.sample_rate,
    )?;
    let peak = audio.peak();
    if peak > 1.0 {
        let scale = 0.9 / peak;
        for s in audio.samples.iter_mut() {
            *s *= scale;
        }
    }
    Ok(audio)
}

/// Clamp negative map values to zero; comparison listening mode.
pub fn rectify(map: &DeconvolvedMap) -> DeconvolvedMap {
    let mut out = map.clone();
    for v in out.values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}
