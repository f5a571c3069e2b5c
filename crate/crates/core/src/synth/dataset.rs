use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::chords::{chord_notes, ChordType};
use super::render::render_instrument;
use super::timbre::{Instrument, TimbreSet};
use crate::dsp::{stft, AudioBuffer, DEFAULT_HOP, DEFAULT_N_FFT, DEFAULT_SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::nn::Sample;

/// The three synthetic genre archetypes standing in for real data.
pub const GENRE_CLASS_NAMES: [&str; 3] = ["percussive", "harmonic", "mixed"];

/// Configuration of the synthetic genre dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenreDatasetSpec {
    pub clips_per_class: usize,
    pub clip_seconds: f64,
    pub seed: u64,
}

impl Default for GenreDatasetSpec {
    fn default() -> Self {
        GenreDatasetSpec {
            clips_per_class: 50,
            clip_seconds: 4.0,
            seed: 0,
        }
    }
}

fn normalize(samples: &mut [f64]) {
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    if peak > 0.0 {
        let scale = 0.8 / peak;
        for v in samples.iter_mut() {
            *v *= scale;
        }
    }
}

/// Class 0: filtered noise bursts on an eighth-second rhythmic grid.
fn percussive_clip(rng: &mut ChaCha8Rng, n: usize, sr: u32) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let grid = sr as usize / 8;
    let burst_len = sr as usize / 25;
    let mut t = 0;
    let mut strong = true;
    while t + burst_len < n {
        let amp = if strong { 1.0 } else { 0.5 } * rng.gen_range(0.7..1.0);
        let mut prev = 0.0;
        for i in 0..burst_len {
            let white: f64 = rng.gen_range(-1.0..1.0);
            // First difference acts as a crude high-pass; exponential decay
            // gives the percussive envelope.
            let hp = white - prev;
            prev = white;
            let env = libm::exp(-(i as f64) / (burst_len as f64 / 4.0));
            out[t + i] += amp * hp * env;
        }
        strong = !strong;
        t += grid;
    }
    normalize(&mut out);
    out
}

/// Class 1: sustained chord pads, two chords per clip.
fn harmonic_clip(
    rng: &mut ChaCha8Rng,
    n: usize,
    sr: u32,
    timbres: &TimbreSet,
) -> Result<Vec<f64>> {
    let strings = timbres.get(Instrument::Strings)?;
    let chords = [ChordType::Major, ChordType::Minor, ChordType::Major7];
    let half = n / 2;
    let half_seconds = half as f64 / sr as f64;
    let mut out = Vec::with_capacity(n);
    for _ in 0..2 {
        let chord = chords[rng.gen_range(0..chords.len())];
        let root = rng.gen_range(45..57);
        let notes = chord_notes(chord, root)?;
        let pad = render_instrument(strings, &notes, half_seconds, sr)?;
        out.extend_from_slice(&pad.samples[..half]);
    }
    out.resize(n, 0.0);
    normalize(&mut out);
    Ok(out)
}

/// Class 2: superposition of both plus pitched bass pulses on a half-second
/// grid.
fn mixed_clip(
    rng: &mut ChaCha8Rng,
    n: usize,
    sr: u32,
    timbres: &TimbreSet,
) -> Result<Vec<f64>> {
    let perc = percussive_clip(rng, n, sr);
    let pad = harmonic_clip(rng, n, sr, timbres)?;
    let mut out: Vec<f64> = perc
        .iter()
        .zip(&pad)
        .map(|(p, h)| 0.5 * p + 0.6 * h)
        .collect();
    let bass_midi = rng.gen_range(33..40);
    let f = super::chords::note_freq(bass_midi)?;
    let grid = sr as usize / 2;
    let pulse_len = sr as usize / 5;
    let mut t = 0;
    while t + pulse_len < n {
        for i in 0..pulse_len {
            let env = libm::exp(-(i as f64) / (pulse_len as f64 / 3.0));
            out[t + i] +=
                0.7 * env * libm::sin(2.0 * core::f64::consts::PI * f * i as f64 / sr as f64);
        }
        t += grid;
    }
    normalize(&mut out);
    Ok(out)
}

/// Generates `3 * clips_per_class` labeled audio clips, deterministic per
/// seed, interleaved percussive/harmonic/mixed.
pub fn generate_genre_clips(spec: &GenreDatasetSpec) -> Result<Vec<(AudioBuffer, usize)>> {
    if spec.clips_per_class == 0 {
        return Err(Error::InvalidArgument("clips_per_class must be >= 1".into()));
    }
    let sr = DEFAULT_SAMPLE_RATE;
    let n = (spec.clip_seconds * sr as f64 + 0.5) as usize;
    let timbres = TimbreSet::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut clips = Vec::with_capacity(3 * spec.clips_per_class);
    for _ in 0..spec.clips_per_class {
        for label in 0..3 {
            let audio = match label {
                0 => percussive_clip(&mut rng, n, sr),
                1 => harmonic_clip(&mut rng, n, sr, &timbres)?,
                _ => mixed_clip(&mut rng, n, sr, &timbres)?,
            };
            clips.push((AudioBuffer::new(audio, sr)?, label));
        }
    }
    Ok(clips)
}

/// Generates `3 * clips_per_class` labeled magnitude spectrograms,
/// deterministic per seed.
pub fn generate_genre_dataset(spec: &GenreDatasetSpec) -> Result<Vec<Sample>> {
    generate_genre_clips(spec)?
        .into_iter()
        .map(|(buf, label)| {
            let tf = stft(&buf, DEFAULT_N_FFT, DEFAULT_HOP)?;
            Ok(Sample {
                magnitude: tf.magnitude,
                label,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_and_shape() {
        let spec = GenreDatasetSpec {
            clips_per_class: 4,
            ..GenreDatasetSpec::default()
        };
        let data = generate_genre_dataset(&spec).unwrap();
        assert_eq!(data.len(), 12);
        for s in &data {
            assert_eq!(s.magnitude.len(), 257 * 171);
            assert!(s.label < 3);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = GenreDatasetSpec {
            clips_per_class: 2,
            seed: 9,
            ..GenreDatasetSpec::default()
        };
        let a = generate_genre_dataset(&spec).unwrap();
        let b = generate_genre_dataset(&spec).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.label, y.label);
            assert_eq!(x.magnitude, y.magnitude);
        }
    }

    #[test]
    fn percussive_centroid_above_harmonic() {
        let spec = GenreDatasetSpec {
            clips_per_class: 3,
            seed: 4,
            ..GenreDatasetSpec::default()
        };
        let data = generate_genre_dataset(&spec).unwrap();
        let centroid = |m: &[f64]| {
            let frames = 171;
            let mut num = 0.0;
            let mut den = 0.0;
            for b in 0..257 {
                let row: f64 = m[b * frames..(b + 1) * frames].iter().sum();
                num += b as f64 * row;
                den += row;
            }
            num / den
        };
        let mean_centroid = |label: usize| {
            let items: Vec<&Sample> = data.iter().filter(|s| s.label == label).collect();
            items.iter().map(|s| centroid(&s.magnitude)).sum::<f64>() / items.len() as f64
        };
        assert!(mean_centroid(0) > mean_centroid(1));
    }

    #[test]
    fn rejects_zero_clips() {
        let spec = GenreDatasetSpec {
            clips_per_class: 0,
            ..GenreDatasetSpec::default()
        };
        assert!(generate_genre_dataset(&spec).is_err());
    }
}
