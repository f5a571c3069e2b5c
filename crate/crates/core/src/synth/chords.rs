use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Equal temperament, A4 = 440 Hz.
pub fn note_freq(midi: u8) -> Result<f64> {
    if midi > 127 {
        return Err(Error::InvalidArgument(alloc::format!(
            "MIDI note {midi} out of range 0..=127"
        )));
    }
    Ok(440.0 * libm::pow(2.0, (midi as f64 - 69.0) / 12.0))
}

/// The eight chord types of the model-signal corpus. "Intervals" is read as
/// a bare perfect-fifth dyad.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChordType {
    Intervals,
    Major,
    Minor,
    Sus4,
    Dominant7,
    Major7,
    Minor7,
    Diminished,
}

impl ChordType {
    pub const ALL: [ChordType; 8] = [
        ChordType::Intervals,
        ChordType::Major,
        ChordType::Minor,
        ChordType::Sus4,
        ChordType::Dominant7,
        ChordType::Major7,
        ChordType::Minor7,
        ChordType::Diminished,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ChordType::Intervals => "intervals",
            ChordType::Major => "major",
            ChordType::Minor => "minor",
            ChordType::Sus4 => "sus4",
            ChordType::Dominant7 => "dominant7",
            ChordType::Major7 => "major7",
            ChordType::Minor7 => "minor7",
            ChordType::Diminished => "diminished",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        ChordType::ALL
            .iter()
            .copied()
            .find(|c| c.name() == name)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown chord type '{name}'")))
    }

    /// Semitone offsets from the root.
    pub fn intervals(&self) -> &'static [u8] {
        match self {
            ChordType::Intervals => &[0, 7],
            ChordType::Major => &[0, 4, 7],
            ChordType::Minor => &[0, 3, 7],
            ChordType::Sus4 => &[0, 5, 7],
            ChordType::Dominant7 => &[0, 4, 7, 10],
            ChordType::Major7 => &[0, 4, 7, 11],
            ChordType::Minor7 => &[0, 3, 7, 10],
            ChordType::Diminished => &[0, 3, 6],
        }
    }
}

/// The four corpus keys and their MIDI roots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Key {
    Eb2,
    Bb2,
    A3,
    G4,
}

impl Key {
    pub const ALL: [Key; 4] = [Key::Eb2, Key::Bb2, Key::A3, Key::G4];

    pub fn name(&self) -> &'static str {
        match self {
            Key::Eb2 => "Eb2",
            Key::Bb2 => "Bb2",
            Key::A3 => "A3",
            Key::G4 => "G4",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Key::ALL
            .iter()
            .copied()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown key '{name}'")))
    }

    pub fn midi(&self) -> u8 {
        match self {
            Key::Eb2 => 39,
            Key::Bb2 => 46,
            Key::A3 => 57,
            Key::G4 => 67,
        }
    }
}

/// Chord tones as MIDI note numbers, sorted ascending.
pub fn chord_notes(chord: ChordType, root_midi: u8) -> Result<Vec<u8>> {
    if root_midi > 127 {
        return Err(Error::InvalidArgument(alloc::format!(
            "root {root_midi} out of range"
        )));
    }
    let notes: Vec<u8> = chord
        .intervals()
        .iter()
        .map(|&i| root_midi + i)
        .collect();
    if notes.iter().any(|&n| n > 127) {
        return Err(Error::InvalidArgument("chord exceeds MIDI range".into()));
    }
    Ok(notes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn tuning_reference() {
        assert!((note_freq(69).unwrap() - 440.0).abs() < 1e-9);
        assert!((note_freq(57).unwrap() - 220.0).abs() < 1e-9);
        assert!((note_freq(39).unwrap() - 77.782).abs() < 1e-3);
        assert!(note_freq(128).is_err());
    }

    #[test]
    fn interval_tables() {
        assert_eq!(chord_notes(ChordType::Major, 60).unwrap(), vec![60, 64, 67]);
        assert_eq!(
            chord_notes(ChordType::Diminished, 60).unwrap(),
            vec![60, 63, 66]
        );
        assert_eq!(chord_notes(ChordType::Intervals, 60).unwrap(), vec![60, 67]);
        assert_eq!(
            chord_notes(ChordType::Minor7, 60).unwrap(),
            vec![60, 63, 67, 70]
        );
    }

    #[test]
    fn key_roots() {
        assert_eq!(Key::Eb2.midi(), 39);
        assert_eq!(Key::Bb2.midi(), 46);
        assert_eq!(Key::A3.midi(), 57);
        assert_eq!(Key::G4.midi(), 67);
    }

    #[test]
    fn name_round_trip() {
        for c in ChordType::ALL {
            assert_eq!(ChordType::from_name(c.name()).unwrap(), c);
        }
        for k in Key::ALL {
            assert_eq!(Key::from_name(k.name()).unwrap(), k);
        }
        assert!(ChordType::from_name("power").is_err());
    }
}
