use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use auralis::config::{self, ConfigMap};
use auralis::maps::{write_map_bin, write_map_csv};
use auralis::model_io::{load_model, save_model};
use auralis::pipeline::{
    self, feature_stem, load_input_grid, parse_feature, FeatureRef,
};
use auralis::report;
use auralis::wav::write_wav;
use auralis_core::analysis::{correlation_study, rf_table};
use auralis_core::deconv::{DeconvRequest, Keep};
use auralis_core::dsp::{DEFAULT_HOP, DEFAULT_N_FFT, DEFAULT_SAMPLE_RATE};
use auralis_core::nn::{evaluate, train, Architecture, CnnModel, Hyper};
use auralis_core::synth::{GenreDatasetSpec, TimbreSet, GENRE_CLASS_NAMES};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Train a spectrogram CNN and listen to what its features respond to:
/// project any feature map back to the input spectrogram, reapply the
/// original phase, and invert the transform.
#[derive(Parser)]
#[command(name = "auralis", version)]
struct Cli {
    /// Optional `key = value` config file; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the per-layer effective receptive-field table.
    RfTable {
        /// Also write rf_table.csv into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the synthetic 3-class genre dataset as labeled WAV clips.
    SynthDataset {
        #[arg(long)]
        out: PathBuf,
        /// Clips per class (default 70).
        #[arg(long)]
        clips_per_class: Option<usize>,
        /// Trailing clips per class reserved for validation (default 20).
        #[arg(long)]
        val_per_class: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the CNN on a dataset directory; writes model.bin and a log.
    Train {
        /// Dataset directory holding index.csv and WAV clips.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Feature maps per conv layer (default 64).
        #[arg(long)]
        width: Option<usize>,
        /// Number of conv layers (default 5).
        #[arg(long)]
        layers: Option<usize>,
        /// Hidden dense width (default 256).
        #[arg(long)]
        hidden: Option<usize>,
        /// Dropout rate after each pool and the hidden layer (default 0.5).
        #[arg(long)]
        dropout: Option<f64>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        momentum: Option<f64>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Stop early once validation accuracy reaches this level.
        #[arg(long)]
        target_val_acc: Option<f64>,
    },
    /// Evaluate a saved model on a dataset's validation split.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Write the 224-signal instrument/chord/key corpus as WAVs.
    ModelSignals {
        #[arg(long)]
        out: PathBuf,
    },
    /// Project features of an input clip to spectrogram-space maps.
    Deconv {
        #[arg(long)]
        model: PathBuf,
        /// Input WAV (mono or downmixed, 11025 Hz, at least 4 s).
        #[arg(long)]
        input: PathBuf,
        /// Feature address LAYER-FEATURE (repeatable), e.g. --feature 3-38.
        #[arg(long = "feature", required = true)]
        features: Vec<String>,
        /// Keep only the k strongest activations of each feature map.
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Project features and render each back to an audible WAV.
    Auralize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "feature", required = true)]
        features: Vec<String>,
        #[arg(long)]
        top_k: Option<usize>,
        /// Clamp negative map values to zero before rendering.
        #[arg(long)]
        rectify: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the per-layer feature-robustness study over the corpus.
    Correlate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Feature maps per layer to include (default: all).
        #[arg(long)]
        features: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn load_config_map(path: &Option<PathBuf>) -> Result<ConfigMap> {
    match path {
        Some(p) => config::load_config(p),
        None => Ok(ConfigMap::new()),
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let cfg = load_config_map(&cli.config)?;
    let mut jobs = cli.jobs;
    config::fill(&mut jobs, &cfg, "jobs")?;
    if let Some(n) = jobs {
        if n == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("initializing worker pool")?;
    }
    match cli.command {
        Command::RfTable { out } => cmd_rf_table(out),
        Command::SynthDataset {
            out,
            clips_per_class,
            val_per_class,
            seed,
        } => cmd_synth_dataset(&cfg, out, clips_per_class, val_per_class, seed),
        Command::Train {
            data,
            out,
            width,
            layers,
            hidden,
            dropout,
            lr,
            momentum,
            batch,
            epochs,
            seed,
            target_val_acc,
        } => {
            let mut o = TrainOpts {
                width,
                layers,
                hidden,
                dropout,
                lr,
                momentum,
                batch,
                epochs,
                seed,
                target_val_acc,
            };
            o.merge(&cfg)?;
            cmd_train(data, out, o)
        }
        Command::Eval { model, data } => cmd_eval(model, data),
        Command::ModelSignals { out } => cmd_model_signals(out),
        Command::Deconv {
            model,
            input,
            features,
            top_k,
            out,
        } => cmd_project(model, input, features, top_k, false, false, out),
        Command::Auralize {
            model,
            input,
            features,
            top_k,
            rectify,
            out,
        } => cmd_project(model, input, features, top_k, true, rectify, out),
        Command::Correlate {
            model,
            out,
            features,
            seed,
        } => cmd_correlate(&cfg, model, out, features, seed),
    }
}

fn cmd_rf_table(out: Option<PathBuf>) -> Result<()> {
    let entries = rf_table(5, DEFAULT_N_FFT, DEFAULT_HOP, DEFAULT_SAMPLE_RATE)?;
    println!("layer  px  width_ms  height_hz");
    for e in &entries {
        println!(
            "{:>5}  {:>2}  {:>8}  {:>9}",
            e.layer, e.pixels, e.table_width_ms, e.table_height_hz
        );
    }
    println!(
        "note: layer-5 height is computed as {} Hz; the commonly tabulated \
         value 1270 Hz is inconsistent with its own time column.",
        entries[4].table_height_hz
    );
    if let Some(dir) = out {
        ensure_dir(&dir)?;
        report::write_text(&dir.join("rf_table.csv"), &report::rf_table_csv(&entries))?;
    }
    Ok(())
}

fn cmd_synth_dataset(
    cfg: &ConfigMap,
    out: PathBuf,
    mut clips_per_class: Option<usize>,
    mut val_per_class: Option<usize>,
    mut seed: Option<u64>,
) -> Result<()> {
    config::fill(&mut clips_per_class, cfg, "clips_per_class")?;
    config::fill(&mut val_per_class, cfg, "val_per_class")?;
    config::fill(&mut seed, cfg, "seed")?;
    let spec = GenreDatasetSpec {
        clips_per_class: clips_per_class.unwrap_or(70),
        clip_seconds: 4.0,
        seed: seed.unwrap_or(0),
    };
    let val = val_per_class.unwrap_or(20);
    ensure_dir(&out)?;
    pipeline::write_dataset(&out, &spec, val)?;
    config::write_resolved(
        &out,
        &[
            ("subcommand", "synth-dataset".into()),
            ("clips_per_class", spec.clips_per_class.to_string()),
            ("val_per_class", val.to_string()),
            ("clip_seconds", spec.clip_seconds.to_string()),
            ("seed", spec.seed.to_string()),
            ("sample_rate", DEFAULT_SAMPLE_RATE.to_string()),
        ],
    )?;
    println!(
        "wrote {} clips ({} per class) to {}",
        3 * spec.clips_per_class,
        spec.clips_per_class,
        out.display()
    );
    Ok(())
}

struct TrainOpts {
    width: Option<usize>,
    layers: Option<usize>,
    hidden: Option<usize>,
    dropout: Option<f64>,
    lr: Option<f64>,
    momentum: Option<f64>,
    batch: Option<usize>,
    epochs: Option<usize>,
    seed: Option<u64>,
    target_val_acc: Option<f64>,
}

impl TrainOpts {
    fn merge(&mut self, cfg: &ConfigMap) -> Result<()> {
        config::fill(&mut self.width, cfg, "width")?;
        config::fill(&mut self.layers, cfg, "layers")?;
        config::fill(&mut self.hidden, cfg, "hidden")?;
        config::fill(&mut self.dropout, cfg, "dropout")?;
        config::fill(&mut self.lr, cfg, "lr")?;
        config::fill(&mut self.momentum, cfg, "momentum")?;
        config::fill(&mut self.batch, cfg, "batch")?;
        config::fill(&mut self.epochs, cfg, "epochs")?;
        config::fill(&mut self.seed, cfg, "seed")?;
        config::fill(&mut self.target_val_acc, cfg, "target_val_acc")?;
        Ok(())
    }
}

fn class_names(n: usize) -> Vec<String> {
    if n == GENRE_CLASS_NAMES.len() {
        GENRE_CLASS_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        (0..n).map(|i| format!("class{i}")).collect()
    }
}

fn cmd_train(data: PathBuf, out: PathBuf, o: TrainOpts) -> Result<()> {
    let dataset = pipeline::load_dataset(&data)?;
    let n_classes = dataset
        .train
        .iter()
        .chain(&dataset.validation)
        .map(|s| s.label)
        .max()
        .unwrap()
        + 1;
    let width = o.width.unwrap_or(64);
    let layers = o.layers.unwrap_or(5);
    let arch = Architecture {
        input_h: 257,
        input_w: 171,
        conv_channels: vec![width; layers],
        hidden: o.hidden.unwrap_or(256),
        class_names: class_names(n_classes),
        dropout_rate: o.dropout.unwrap_or(0.5),
    };
    let hyper = Hyper {
        lr: o.lr.unwrap_or(0.01),
        momentum: o.momentum.unwrap_or(0.9),
        batch: o.batch.unwrap_or(16),
        epochs: o.epochs.unwrap_or(30),
        seed: o.seed.unwrap_or(0),
        target_val_acc: o.target_val_acc,
    };
    let mut model = CnnModel::new(arch.clone(), &mut ChaCha8Rng::seed_from_u64(hyper.seed))?;
    println!(
        "training {} conv layers x {} maps, hidden {}, {} train / {} validation clips",
        layers,
        width,
        arch.hidden,
        dataset.train.len(),
        dataset.validation.len()
    );
    let stats = train(&mut model, &dataset, &hyper)?;
    for s in &stats {
        println!(
            "epoch {:>3}: train loss {:.4} acc {:.3} | val loss {:.4} acc {:.3}",
            s.epoch, s.train_loss, s.train_acc, s.val_loss, s.val_acc
        );
    }
    ensure_dir(&out)?;
    save_model(&out.join("model.bin"), &model)?;
    report::write_text(&out.join("training_log.csv"), &report::training_log_csv(&stats))?;
    config::write_resolved(
        &out,
        &[
            ("subcommand", "train".into()),
            ("data", data.display().to_string()),
            ("width", width.to_string()),
            ("layers", layers.to_string()),
            ("hidden", arch.hidden.to_string()),
            ("dropout", arch.dropout_rate.to_string()),
            ("lr", hyper.lr.to_string()),
            ("momentum", hyper.momentum.to_string()),
            ("batch", hyper.batch.to_string()),
            ("epochs", hyper.epochs.to_string()),
            ("seed", hyper.seed.to_string()),
            (
                "target_val_acc",
                hyper
                    .target_val_acc
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "none".into()),
            ),
        ],
    )?;
    println!("model saved to {}", out.join("model.bin").display());
    Ok(())
}

fn cmd_eval(model_path: PathBuf, data: PathBuf) -> Result<()> {
    let model = load_model(&model_path)?;
    let dataset = pipeline::load_dataset(&data)?;
    let split = if dataset.validation.is_empty() {
        println!("no validation split; evaluating on the training split");
        &dataset.train
    } else {
        &dataset.validation
    };
    let (loss, acc, confusion) = evaluate(&model, split)?;
    println!("clips: {}", split.len());
    println!("loss: {loss:.4}");
    println!("accuracy: {acc:.4}");
    println!("confusion matrix (rows = true, cols = predicted):");
    for (i, row) in confusion.iter().enumerate() {
        let name = model
            .arch
            .class_names
            .get(i)
            .map(String::as_str)
            .unwrap_or("?");
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>4}")).collect();
        println!("  {name:>12} {}", cells.join(" "));
    }
    Ok(())
}

fn cmd_model_signals(out: PathBuf) -> Result<()> {
    ensure_dir(&out)?;
    let paths = pipeline::write_corpus(&out)?;
    config::write_resolved(
        &out,
        &[
            ("subcommand", "model-signals".into()),
            ("signals", paths.len().to_string()),
            ("sample_rate", DEFAULT_SAMPLE_RATE.to_string()),
        ],
    )?;
    println!("wrote {} model signals to {}", paths.len(), out.display());
    Ok(())
}

fn cmd_project(
    model_path: PathBuf,
    input: PathBuf,
    features: Vec<String>,
    top_k: Option<usize>,
    render_audio: bool,
    rectify: bool,
    out: PathBuf,
) -> Result<()> {
    let model = load_model(&model_path)?;
    let parsed: Vec<FeatureRef> = features
        .iter()
        .map(|s| parse_feature(s))
        .collect::<Result<_>>()?;
    let keep = match top_k {
        Some(k) => Keep::TopK(k),
        None => Keep::All,
    };
    let grid = load_input_grid(&model, &input)?;
    let trace = model.forward(&grid.magnitude)?;
    ensure_dir(&out)?;
    let mut failed = 0usize;
    for feature in &parsed {
        let stem = feature_stem(*feature);
        let result = pipeline::project_feature(&model, &trace, &grid, *feature, keep, rectify)
            .and_then(|p| {
                write_map_bin(&out.join(format!("{stem}.bin")), &p.map.values, p.map.h, p.map.w)?;
                write_map_csv(&out.join(format!("{stem}.csv")), &p.map.values, p.map.h, p.map.w)?;
                if render_audio {
                    write_wav(&out.join(format!("{stem}.wav")), &p.audio)?;
                }
                Ok(())
            });
        match result {
            Ok(()) => println!("{stem}: ok"),
            Err(e) => {
                eprintln!("{stem}: {e:#}");
                failed += 1;
            }
        }
    }
    config::write_resolved(
        &out,
        &[
            (
                "subcommand",
                if render_audio { "auralize" } else { "deconv" }.into(),
            ),
            ("model", model_path.display().to_string()),
            ("input", input.display().to_string()),
            ("features", features.join(" ")),
            (
                "top_k",
                top_k.map(|k| k.to_string()).unwrap_or_else(|| "all".into()),
            ),
            ("rectify", rectify.to_string()),
        ],
    )?;
    if failed > 0 {
        bail!("{failed} of {} feature projections failed", parsed.len());
    }
    Ok(())
}

fn cmd_correlate(
    cfg: &ConfigMap,
    model_path: PathBuf,
    out: PathBuf,
    mut features: Option<usize>,
    mut seed: Option<u64>,
) -> Result<()> {
    config::fill(&mut features, cfg, "features")?;
    config::fill(&mut seed, cfg, "seed")?;
    let model = load_model(&model_path)?;
    let layers = model.num_conv_layers();
    let max_features = model
        .arch
        .conv_channels
        .iter()
        .copied()
        .min()
        .unwrap_or(0);
    let features_per_layer = features.unwrap_or(max_features).min(max_features);
    if features_per_layer == 0 {
        bail!("model has no feature maps to correlate");
    }
    let timbres = TimbreSet::builtin();
    let requests: Vec<DeconvRequest> = pipeline::study_requests(layers, features_per_layer);
    let rows = correlation_study(layers, features_per_layer, |spec| {
        pipeline::corpus_maps(&model, &timbres, spec, &requests)
            .map_err(|e| auralis_core::Error::InvalidArgument(format!("{e:#}")))
    })?;
    ensure_dir(&out)?;
    report::write_text(&out.join("correlation.csv"), &report::correlation_csv(&rows))?;
    config::write_resolved(
        &out,
        &[
            ("subcommand", "correlate".into()),
            ("model", model_path.display().to_string()),
            ("layers", layers.to_string()),
            ("features_per_layer", features_per_layer.to_string()),
            ("seed", seed.unwrap_or(0).to_string()),
        ],
    )?;
    println!("attribute    layer   mean     std    pairs  skipped");
    for r in &rows {
        println!(
            "{:<12} {:>5}  {:>6.3}  {:>6.3}  {:>5}  {:>7}",
            r.attribute.name(),
            r.layer,
            r.mean,
            r.std,
            r.n_pairs,
            r.n_skipped
        );
    }
    Ok(())
}
