use alloc::string::String;
use alloc::vec::Vec;

use super::chords::{chord_notes, ChordType, Key};
use super::render::render_instrument;
use super::timbre::{Instrument, TimbreSet};
use crate::dsp::{AudioBuffer, DEFAULT_SAMPLE_RATE};
use crate::error::Result;

/// 4 seconds at 11025 Hz.
pub const MODEL_SIGNAL_SAMPLES: usize = 44_100;
const HITS: usize = 6;

/// Identifies one of the 224 corpus items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelSignalSpec {
    pub instrument: Instrument,
    pub chord: ChordType,
    pub key: Key,
}

impl ModelSignalSpec {
    /// File stem used by the corpus on disk: `{instrument}_{chord}_{key}`.
    pub fn stem(&self) -> String {
        alloc::format!(
            "{}_{}_{}",
            self.instrument.name(),
            self.chord.name(),
            self.key.name()
        )
    }
}

/// Every (instrument, chord, key) combination exactly once; 7 x 8 x 4 = 224,
/// instrument-major order.
pub fn all_specs() -> Vec<ModelSignalSpec> {
    let mut specs = Vec::with_capacity(224);
    for instrument in Instrument::ALL {
        for chord in ChordType::ALL {
            for key in Key::ALL {
                specs.push(ModelSignalSpec {
                    instrument,
                    chord,
                    key,
                });
            }
        }
    }
    specs
}

/// Renders one model signal: six successive block-chord hits stepping the
/// voicing upward (root position, then the lowest note moved up an octave
/// per hit). Deterministic per spec; exactly 44100 samples.
pub fn model_signal(spec: &ModelSignalSpec, timbres: &TimbreSet) -> Result<AudioBuffer> {
    let timbre = timbres.get(spec.instrument)?;
    let hit_samples = MODEL_SIGNAL_SAMPLES / HITS;
    let hit_seconds = hit_samples as f64 / DEFAULT_SAMPLE_RATE as f64;
    let mut voicing = chord_notes(spec.chord, spec.key.midi())?;
    let mut samples = Vec::with_capacity(MODEL_SIGNAL_SAMPLES);
    for _ in 0..HITS {
        let hit = render_instrument(timbre, &voicing, hit_seconds, DEFAULT_SAMPLE_RATE)?;
        samples.extend_from_slice(&hit.samples[..hit_samples]);
        // Next position: lowest note up an octave (clamped to MIDI range).
        voicing.sort_unstable();
        let lowest = voicing[0];
        voicing[0] = lowest.saturating_add(12).min(127);
    }
    AudioBuffer::new(samples, DEFAULT_SAMPLE_RATE)
}
