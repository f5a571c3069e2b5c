//! Batch workflows shared by the subcommands: dataset files on disk, loading
//! a WAV into the model's input grid, projecting features to maps and audio,
//! and supplying corpus projections to the correlation study.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use auralis_core::auralize::{auralise, rectify, StftParams};
use auralis_core::deconv::{deconv_feature, DeconvRequest, DeconvolvedMap, Keep};
use auralis_core::dsp::{stft, AudioBuffer, DEFAULT_HOP, DEFAULT_N_FFT, DEFAULT_SAMPLE_RATE};
use auralis_core::nn::{CnnModel, Dataset, ForwardTrace, Sample};
use auralis_core::synth::{
    generate_genre_clips, model_signal, GenreDatasetSpec, ModelSignalSpec, TimbreSet,
    GENRE_CLASS_NAMES,
};
use rayon::prelude::*;

use crate::wav::{read_wav, write_wav};

/// "Feature l-f" addressing: 1-based layer, 0-based feature index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureRef {
    pub layer: usize,
    pub feature: usize,
}

pub fn parse_feature(s: &str) -> Result<FeatureRef> {
    let Some((l, f)) = s.split_once('-') else {
        bail!("feature '{s}' must be LAYER-FEATURE, e.g. 3-38");
    };
    Ok(FeatureRef {
        layer: l.trim().parse().with_context(|| format!("layer in '{s}'"))?,
        feature: f.trim().parse().with_context(|| format!("feature in '{s}'"))?,
    })
}

// --- Dataset files ---------------------------------------------------------

/// Writes the synthetic genre clips as WAVs plus an `index.csv` of
/// `file,label,class,split`. The last `val_per_class` clips of each class
/// form the validation split.
pub fn write_dataset(out: &Path, spec: &GenreDatasetSpec, val_per_class: usize) -> Result<()> {
    if val_per_class >= spec.clips_per_class {
        bail!(
            "val_per_class {val_per_class} must be below clips_per_class {}",
            spec.clips_per_class
        );
    }
    let clips = generate_genre_clips(spec)?;
    let index_path = out.join("index.csv");
    let file = fs::File::create(&index_path)
        .with_context(|| format!("creating {}", index_path.display()))?;
    let mut index = std::io::BufWriter::new(file);
    writeln!(index, "file,label,class,split")?;
    let mut seen = vec![0usize; GENRE_CLASS_NAMES.len()];
    for (buf, label) in &clips {
        let i = seen[*label];
        seen[*label] += 1;
        let split = if i >= spec.clips_per_class - val_per_class {
            "validation"
        } else {
            "train"
        };
        let name = format!("{}_{i:03}.wav", GENRE_CLASS_NAMES[*label]);
        write_wav(&out.join(&name), buf)?;
        writeln!(index, "{name},{label},{},{split}", GENRE_CLASS_NAMES[*label])?;
    }
    Ok(())
}

/// Reads a dataset directory written by [`write_dataset`], transforming each
/// clip to its magnitude spectrogram.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let index_path = dir.join("index.csv");
    let text = fs::read_to_string(&index_path)
        .with_context(|| format!("reading {}", index_path.display()))?;
    let mut data = Dataset::default();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            bail!("{} line {}: expected 4 columns", index_path.display(), lineno + 1);
        }
        let buf = read_wav(&dir.join(parts[0]))?;
        let tf = stft(&buf, DEFAULT_N_FFT, DEFAULT_HOP)?;
        let sample = Sample {
            magnitude: tf.magnitude,
            label: parts[1]
                .parse()
                .with_context(|| format!("{} line {}: label", index_path.display(), lineno + 1))?,
        };
        match parts[3] {
            "train" => data.train.push(sample),
            "validation" => data.validation.push(sample),
            other => bail!(
                "{} line {}: unknown split '{other}'",
                index_path.display(),
                lineno + 1
            ),
        }
    }
    if data.train.is_empty() {
        bail!("{}: no training rows", index_path.display());
    }
    Ok(data)
}

// --- Input grids -----------------------------------------------------------

/// Magnitude and phase cropped to the model's input dimensions.
pub struct InputGrid {
    pub magnitude: Vec<f64>,
    pub phase: Vec<f64>,
    pub h: usize,
    pub w: usize,
}

/// Analyzes an audio buffer and crops the grid to (input_h, input_w): the
/// bin count must match exactly, excess frames are dropped from the end.
pub fn input_grid(model: &CnnModel, audio: &AudioBuffer) -> Result<InputGrid> {
    if audio.sample_rate != DEFAULT_SAMPLE_RATE {
        bail!(
            "input is {} Hz; the pipeline expects {DEFAULT_SAMPLE_RATE} Hz",
            audio.sample_rate
        );
    }
    let tf = stft(audio, DEFAULT_N_FFT, DEFAULT_HOP)?;
    let (h, w) = (model.arch.input_h, model.arch.input_w);
    if tf.n_bins != h {
        bail!("spectrogram has {} bins, model expects {h}", tf.n_bins);
    }
    if tf.n_frames < w {
        bail!(
            "input too short: {} frames, model expects {w} (need {} samples)",
            tf.n_frames,
            (w - 1) * DEFAULT_HOP + DEFAULT_N_FFT
        );
    }
    let mut magnitude = Vec::with_capacity(h * w);
    let mut phase = Vec::with_capacity(h * w);
    for b in 0..h {
        let row = b * tf.n_frames;
        magnitude.extend_from_slice(&tf.magnitude[row..row + w]);
        phase.extend_from_slice(&tf.phase[row..row + w]);
    }
    Ok(InputGrid {
        magnitude,
        phase,
        h,
        w,
    })
}

pub fn load_input_grid(model: &CnnModel, path: &Path) -> Result<InputGrid> {
    let audio = read_wav(path)?;
    input_grid(model, &audio).with_context(|| format!("analyzing {}", path.display()))
}

// --- Feature projection ----------------------------------------------------

pub struct Projection {
    pub feature: FeatureRef,
    pub map: DeconvolvedMap,
    pub audio: AudioBuffer,
}

/// Projects one feature of a traced forward pass back to a map and a signal.
pub fn project_feature(
    model: &CnnModel,
    trace: &ForwardTrace,
    grid: &InputGrid,
    feature: FeatureRef,
    keep: Keep,
    rectify_map: bool,
) -> Result<Projection> {
    let req = DeconvRequest {
        layer: feature.layer,
        feature: feature.feature,
        keep,
    };
    let mut map = deconv_feature(model, trace, &req)?;
    if rectify_map {
        map = rectify(&map);
    }
    let audio = auralise(&map, &grid.phase, &StftParams::default())?;
    Ok(Projection {
        feature,
        map,
        audio,
    })
}

/// Output file stem for a feature, mirroring the `l-f` addressing.
pub fn feature_stem(feature: FeatureRef) -> String {
    format!("layer{}_feat{}", feature.layer, feature.feature)
}

// --- Corpus projections for the correlation study --------------------------

/// All (layer, feature) requests covered by the study, layer-major.
pub fn study_requests(layers: usize, features_per_layer: usize) -> Vec<DeconvRequest> {
    let mut reqs = Vec::with_capacity(layers * features_per_layer);
    for layer in 1..=layers {
        for feature in 0..features_per_layer {
            reqs.push(DeconvRequest {
                layer,
                feature,
                keep: Keep::All,
            });
        }
    }
    reqs
}

/// Renders one corpus signal and projects every requested feature.
/// Projection of independent requests runs on the current rayon pool; the
/// output order is fixed, so results do not depend on the worker count.
pub fn corpus_maps(
    model: &CnnModel,
    timbres: &TimbreSet,
    spec: &ModelSignalSpec,
    requests: &[DeconvRequest],
) -> Result<Vec<Vec<f64>>> {
    let audio = model_signal(spec, timbres)?;
    let grid = input_grid(model, &audio)?;
    let trace = model.forward(&grid.magnitude)?;
    let maps: Vec<Vec<f64>> = requests
        .par_iter()
        .map(|req| deconv_feature(model, &trace, req).map(|m| m.values))
        .collect::<std::result::Result<_, _>>()?;
    Ok(maps)
}

/// Writes the 224-signal corpus as WAVs plus a `manifest.csv`; returns the
/// written paths.
pub fn write_corpus(out: &Path) -> Result<Vec<PathBuf>> {
    let timbres = TimbreSet::builtin();
    let specs = auralis_core::synth::all_specs();
    let manifest_path = out.join("manifest.csv");
    let file = fs::File::create(&manifest_path)
        .with_context(|| format!("creating {}", manifest_path.display()))?;
    let mut manifest = std::io::BufWriter::new(file);
    writeln!(manifest, "file,instrument,chord,key")?;
    // Rendering is independent per signal; order of the returned list is the
    // canonical spec order regardless of worker count.
    let rendered: Vec<(ModelSignalSpec, AudioBuffer)> = specs
        .par_iter()
        .map(|spec| model_signal(spec, &timbres).map(|buf| (*spec, buf)))
        .collect::<std::result::Result<_, _>>()?;
    let mut paths = Vec::with_capacity(rendered.len());
    for (spec, buf) in rendered {
        let name = format!("{}.wav", spec.stem());
        let path = out.join(&name);
        write_wav(&path, &buf)?;
        writeln!(
            manifest,
            "{name},{},{},{}",
            spec.instrument.name(),
            spec.chord.name(),
            spec.key.name()
        )?;
        paths.push(path);
    }
    Ok(paths)
}
