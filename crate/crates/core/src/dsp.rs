//! STFT analysis/synthesis with the fixed front-end configuration:
//! 512-point FFT, 50% hop, 11025 Hz, periodic Hann window.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fft::{Complex, Fft};

pub const DEFAULT_SAMPLE_RATE: u32 = 11_025;
pub const DEFAULT_N_FFT: usize = 512;
pub const DEFAULT_HOP: usize = 256;

/// A mono signal with amplitudes nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample_rate must be > 0".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        Ok(AudioBuffer {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(libm::fabs(*s)))
    }
}

/// Magnitude+phase time-frequency grid; the medium every stage reads or writes.
///
/// Row-major `[n_bins x n_frames]`, bin 0 = DC, `n_bins = n_fft/2 + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    pub magnitude: Vec<f64>,
    pub phase: Vec<f64>,
    pub n_bins: usize,
    pub n_frames: usize,
    pub n_fft: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl ComplexSpectrogram {
    pub fn mag(&self, bin: usize, frame: usize) -> f64 {
        self.magnitude[bin * self.n_frames + frame]
    }

    /// Frequency resolution (bin spacing) in Hz.
    pub fn bin_hz(&self) -> f64 {
        self.sample_rate as f64 / self.n_fft as f64
    }
}

/// Periodic Hann window: `w[k] = 0.5 (1 - cos(2 pi k / n))`.
///
/// At 50% hop, `w[k] + w[k + n/2] = 1`, which is what the overlap-add
/// normalization in [`istft`] relies on.
pub fn hann_window(n: usize) -> Result<Vec<f64>> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(alloc::format!(
            "window length must be even and >= 2, got {n}"
        )));
    }
    Ok((0..n)
        .map(|k| 0.5 * (1.0 - libm::cos(2.0 * core::f64::consts::PI * k as f64 / n as f64)))
        .collect())
}

/// Frame count for a signal analyzed without centering: frame `t` covers
/// samples `[t*hop, t*hop + n_fft)`.
pub fn frame_count(signal_len: usize, n_fft: usize, hop: usize) -> usize {
    (signal_len - n_fft) / hop + 1
}

/// Short-time Fourier transform. No centering or zero padding; trailing
/// samples that do not fill a frame are dropped.
pub fn stft(signal: &AudioBuffer, n_fft: usize, hop: usize) -> Result<ComplexSpectrogram> {
    if signal.len() < n_fft {
        return Err(Error::InvalidArgument(alloc::format!(
            "signal length {} shorter than n_fft {n_fft}",
            signal.len()
        )));
    }
    if hop == 0 {
        return Err(Error::InvalidArgument("hop must be > 0".into()));
    }
    let window = hann_window(n_fft)?;
    let plan = Fft::new(n_fft)?;
    let n_bins = n_fft / 2 + 1;
    let n_frames = frame_count(signal.len(), n_fft, hop);

    let mut magnitude = vec![0.0; n_bins * n_frames];
    let mut phase = vec![0.0; n_bins * n_frames];
    let mut buf = vec![Complex::ZERO; n_fft];
    for t in 0..n_frames {
        let start = t * hop;
        for k in 0..n_fft {
            buf[k] = Complex::new(signal.samples[start + k] * window[k], 0.0);
        }
        plan.forward(&mut buf)?;
        for (b, v) in buf.iter().take(n_bins).enumerate() {
            magnitude[b * n_frames + t] = v.abs();
            phase[b * n_frames + t] = v.arg();
        }
    }
    Ok(ComplexSpectrogram {
        magnitude,
        phase,
        n_bins,
        n_frames,
        n_fft,
        hop,
        sample_rate: signal.sample_rate,
    })
}

/// Inverse STFT by windowed overlap-add with per-sample squared-window
/// normalization. Output length is `(n_frames - 1) * hop + n_fft`.
pub fn istft(spec: &ComplexSpectrogram) -> Result<AudioBuffer> {
    istft_grid(
        &spec.magnitude,
        &spec.phase,
        spec.n_bins,
        spec.n_frames,
        spec.n_fft,
        spec.hop,
        spec.sample_rate,
    )
}

/// [`istft`] over an arbitrary magnitude grid (possibly signed, as produced
/// by deconvolution) paired with a phase grid of the same shape.
pub fn istft_grid(
    magnitude: &[f64],
    phase: &[f64],
    n_bins: usize,
    n_frames: usize,
    n_fft: usize,
    hop: usize,
    sample_rate: u32,
) -> Result<AudioBuffer> {
    if n_bins != n_fft / 2 + 1 {
        return Err(Error::InvalidArgument(alloc::format!(
            "n_bins {n_bins} inconsistent with n_fft {n_fft}"
        )));
    }
    if magnitude.len() != n_bins * n_frames || phase.len() != magnitude.len() {
        return Err(Error::InvalidArgument(
            "magnitude/phase dimensions inconsistent".into(),
        ));
    }
    let window = hann_window(n_fft)?;
    let plan = Fft::new(n_fft)?;
    let out_len = (n_frames - 1) * hop + n_fft;
    let mut out = vec![0.0; out_len];
    let mut norm = vec![0.0; out_len];
    let mut buf = vec![Complex::ZERO; n_fft];
    for t in 0..n_frames {
        // Rebuild the full conjugate-symmetric spectrum from the half grid.
        for b in 0..n_bins {
            buf[b] = Complex::from_polar(magnitude[b * n_frames + t], phase[b * n_frames + t]);
        }
        for b in n_bins..n_fft {
            let mirror = buf[n_fft - b];
            buf[b] = Complex::new(mirror.re, -mirror.im);
        }
        plan.inverse(&mut buf)?;
        let start = t * hop;
        for k in 0..n_fft {
            out[start + k] += buf[k].re * window[k];
            norm[start + k] += window[k] * window[k];
        }
    }
    for (s, n) in out.iter_mut().zip(&norm) {
        if *n > 1e-12 {
            *s /= n;
        }
    }
    AudioBuffer::new(out, sample_rate)
}

/// Reconstruction SNR in dB of `approx` against `reference` over a sample
/// range; used by the round-trip checks.
pub fn snr_db(reference: &[f64], approx: &[f64]) -> f64 {
    let signal: f64 = reference.iter().map(|s| s * s).sum();
    let noise: f64 = reference
        .iter()
        .zip(approx)
        .map(|(r, a)| (r - a) * (r - a))
        .sum();
    if noise == 0.0 {
        return f64::INFINITY;
    }
    10.0 * libm::log10(signal / noise)
}
