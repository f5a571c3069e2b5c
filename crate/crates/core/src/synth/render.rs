use alloc::vec;

use super::chords::note_freq;
use super::timbre::Timbre;
use crate::dsp::AudioBuffer;
use crate::error::{Error, Result};

/// Attack/decay/release in seconds, sustain as a level in 0..1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adsr {
    pub attack: f64,
    pub decay: f64,
    pub sustain: f64,
    pub release: f64,
}

impl Adsr {
    /// Envelope value at time `t` of a note lasting `duration` seconds.
    pub fn level(&self, t: f64, duration: f64) -> f64 {
        let body = if t < self.attack {
            t / self.attack
        } else if t < self.attack + self.decay {
            let frac = (t - self.attack) / self.decay;
            1.0 - (1.0 - self.sustain) * frac
        } else {
            self.sustain
        };
        let tail = duration - self.release;
        if t > tail && self.release > 0.0 {
            body * ((duration - t) / self.release).max(0.0)
        } else {
            body
        }
    }
}

/// Additive synthesis of a note set: per note, a sum of partials weighted by
/// the timbre's harmonic amplitudes (partials above Nyquist dropped), shaped
/// by its ADSR envelope. The mix is peak-normalized to 0.8.
pub fn render_instrument(
    timbre: &Timbre,
    notes: &[u8],
    duration_s: f64,
    sample_rate: u32,
) -> Result<AudioBuffer> {
    if notes.is_empty() {
        return Err(Error::InvalidArgument("empty note set".into()));
    }
    if duration_s <= 0.0 {
        return Err(Error::InvalidArgument("non-positive duration".into()));
    }
    let n = (duration_s * sample_rate as f64 + 0.5) as usize;
    let nyquist = sample_rate as f64 / 2.0;
    let dt = 1.0 / sample_rate as f64;
    let mut mix = vec![0.0f64; n];
    for &note in notes {
        let f0 = note_freq(note)?;
        for (h, &amp) in timbre.harmonics.iter().enumerate() {
            let freq = f0 * (h + 1) as f64;
            if amp == 0.0 || freq >= nyquist {
                continue;
            }
            let step = 2.0 * core::f64::consts::PI * freq * dt;
            // Rotating phasor instead of a sin() per sample.
            let (mut s, mut c) = (0.0f64, 1.0f64);
            let (ds, dc) = (libm::sin(step), libm::cos(step));
            for v in mix.iter_mut() {
                *v += amp * s;
                let ns = s * dc + c * ds;
                c = c * dc - s * ds;
                s = ns;
            }
        }
    }
    for (i, v) in mix.iter_mut().enumerate() {
        *v *= timbre.adsr.level(i as f64 * dt, duration_s);
    }
    let peak = mix.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    if peak > 0.0 {
        let scale = 0.8 / peak;
        for v in mix.iter_mut() {
            *v *= scale;
        }
    }
    AudioBuffer::new(mix, sample_rate)
}
