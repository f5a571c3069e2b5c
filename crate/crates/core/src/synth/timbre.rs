use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::render::Adsr;
use crate::error::{Error, Result};

/// The seven corpus instruments. The source lists six names for its seven
/// instruments; an organ timbre fills the unnamed slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instrument {
    PureSine,
    Strings,
    AcousticGuitar,
    Saxophone,
    Piano,
    ElectricGuitar,
    Organ,
}

impl Instrument {
    pub const ALL: [Instrument; 7] = [
        Instrument::PureSine,
        Instrument::Strings,
        Instrument::AcousticGuitar,
        Instrument::Saxophone,
        Instrument::Piano,
        Instrument::ElectricGuitar,
        Instrument::Organ,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Instrument::PureSine => "sine",
            Instrument::Strings => "strings",
            Instrument::AcousticGuitar => "acoustic_guitar",
            Instrument::Saxophone => "saxophone",
            Instrument::Piano => "piano",
            Instrument::ElectricGuitar => "electric_guitar",
            Instrument::Organ => "organ",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Instrument::ALL
            .iter()
            .copied()
            .find(|i| i.name() == name)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown instrument '{name}'")))
    }
}

/// Fixed harmonic-amplitude vector plus envelope; everything a timbre is.
#[derive(Debug, Clone, PartialEq)]
pub struct Timbre {
    pub name: String,
    pub harmonics: Vec<f64>,
    pub adsr: Adsr,
}

/// All timbres, looked up by instrument.
#[derive(Debug, Clone)]
pub struct TimbreSet {
    timbres: Vec<Timbre>,
}

impl TimbreSet {
    /// The checked-in definitions from `data/timbres.txt`.
    pub fn builtin() -> TimbreSet {
        parse_timbres(include_str!("../../data/timbres.txt"))
            .expect("builtin timbre file is well-formed")
    }

    pub fn from_timbres(timbres: Vec<Timbre>) -> Result<TimbreSet> {
        let set = TimbreSet { timbres };
        for inst in Instrument::ALL {
            set.get(inst)?;
        }
        Ok(set)
    }

    pub fn get(&self, instrument: Instrument) -> Result<&Timbre> {
        self.timbres
            .iter()
            .find(|t| t.name == instrument.name())
            .ok_or_else(|| {
                Error::InvalidArgument(alloc::format!(
                    "no timbre defined for '{}'",
                    instrument.name()
                ))
            })
    }
}

/// Parses the plain-text timbre format: `[name]` blocks with `harmonics =`
/// and `adsr =` entries; `#` starts a comment.
pub fn parse_timbres(text: &str) -> Result<TimbreSet> {
    let mut timbres: Vec<Timbre> = Vec::new();
    let mut current: Option<(String, Option<Vec<f64>>, Option<Adsr>)> = None;

    let finish = |cur: &mut Option<(String, Option<Vec<f64>>, Option<Adsr>)>,
                      out: &mut Vec<Timbre>|
     -> Result<()> {
        if let Some((name, harmonics, adsr)) = cur.take() {
            let harmonics = harmonics.ok_or_else(|| {
                Error::InvalidArgument(alloc::format!("timbre '{name}' missing harmonics"))
            })?;
            let adsr = adsr.ok_or_else(|| {
                Error::InvalidArgument(alloc::format!("timbre '{name}' missing adsr"))
            })?;
            if harmonics.is_empty() || harmonics.iter().any(|h| !h.is_finite() || *h < 0.0) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "timbre '{name}' has invalid harmonics"
                )));
            }
            out.push(Timbre {
                name,
                harmonics,
                adsr,
            });
        }
        Ok(())
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            finish(&mut current, &mut timbres)?;
            current = Some((name.trim().to_string(), None, None));
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(alloc::format!("timbre file line {}: expected key = value", lineno + 1))
        })?;
        let numbers: Vec<f64> = value
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| {
                    Error::InvalidArgument(alloc::format!(
                        "timbre file line {}: bad number '{tok}'",
                        lineno + 1
                    ))
                })
            })
            .collect::<Result<_>>()?;
        let entry = current.as_mut().ok_or_else(|| {
            Error::InvalidArgument(alloc::format!(
                "timbre file line {}: entry outside a [block]",
                lineno + 1
            ))
        })?;
        match key.trim() {
            "harmonics" => entry.1 = Some(numbers),
            "adsr" => {
                if numbers.len() != 4 {
                    return Err(Error::InvalidArgument(alloc::format!(
                        "timbre file line {}: adsr needs 4 values",
                        lineno + 1
                    )));
                }
                entry.2 = Some(Adsr {
                    attack: numbers[0],
                    decay: numbers[1],
                    sustain: numbers[2],
                    release: numbers[3],
                });
            }
            other => {
                return Err(Error::InvalidArgument(alloc::format!(
                    "timbre file line {}: unknown key '{other}'",
                    lineno + 1
                )))
            }
        }
    }
    finish(&mut current, &mut timbres)?;
    TimbreSet::from_timbres(timbres)
}
