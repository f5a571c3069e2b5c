//! End-to-end acceptance gate. Each numbered criterion prints one PASS/FAIL
//! line; the test fails if any criterion (other than the informational trend
//! check) fails or exceeds its runtime budget.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use auralis::wav::read_wav;
use auralis_core::analysis::Attribute;
use auralis_core::auralize::{auralise, StftParams};
use auralis_core::deconv::{
    deconv_feature, transpose_conv, unpool, DeconvRequest, DeconvolvedMap, Keep,
};
use auralis_core::dsp::{snr_db, stft, AudioBuffer, DEFAULT_SAMPLE_RATE};
use auralis_core::nn::{
    backward, conv2d_same, cross_entropy, maxpool2x2, Activation, Architecture, CnnModel,
    ConvLayer, Tensor3, KERNEL,
};
use auralis_core::synth::{all_specs, chord_notes, Instrument};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn report(&mut self, number: usize, name: &str, elapsed: Duration, budget: Duration, result: Result<(), String>) {
        let within = elapsed <= budget;
        match (&result, within) {
            (Ok(()), true) => {
                println!("criterion {number} ({name}): PASS [{:.1}s]", elapsed.as_secs_f64())
            }
            (Ok(()), false) => {
                let msg = format!(
                    "criterion {number} ({name}): FAIL — over budget ({:.1}s > {:.1}s)",
                    elapsed.as_secs_f64(),
                    budget.as_secs_f64()
                );
                println!("{msg}");
                self.failures.push(msg);
            }
            (Err(e), _) => {
                let msg = format!("criterion {number} ({name}): FAIL — {e}");
                println!("{msg}");
                self.failures.push(msg);
            }
        }
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_auralis"))
}

fn run_ok(cmd: &mut Command) -> Result<String, String> {
    let out = cmd.output().map_err(|e| format!("spawning binary: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "command exited with {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn random_signal(len: usize, seed: u64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AudioBuffer::new(
        (0..len).map(|_| rng.gen_range(-0.5..0.5)).collect(),
        DEFAULT_SAMPLE_RATE,
    )
    .unwrap()
}

// --- criterion 1 -----------------------------------------------------------

fn criterion_1() -> Result<(), String> {
    let stdout = run_ok(bin().arg("rf-table"))?;
    let mut widths = Vec::new();
    let mut heights = Vec::new();
    for line in stdout.lines() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() == 4 {
            if let (Ok(w), Ok(h)) = (fields[2].parse::<i64>(), fields[3].parse::<i64>()) {
                widths.push(w);
                heights.push(h);
            }
        }
    }
    if widths != vec![93, 162, 302, 580, 1137] {
        return Err(format!("time widths {widths:?} != [93, 162, 302, 580, 1137]"));
    }
    for (h, want) in heights.iter().zip([86, 151, 280, 538]) {
        if (h - want).abs() > 1 {
            return Err(format!("height {h} != {want} (±1)"));
        }
    }
    if (heights[4] - 1055).abs() > 1 {
        return Err(format!("layer-5 height {} != computed 1055", heights[4]));
    }
    if !stdout.contains("1270") {
        return Err("missing note about the tabulated 1270 Hz figure".into());
    }
    Ok(())
}

// --- criterion 2 -----------------------------------------------------------

fn criterion_2() -> Result<(), String> {
    for seed in 0..20 {
        let signal = random_signal(44_100, 1000 + seed);
        let spec = stft(&signal, 512, 256).map_err(|e| e.to_string())?;
        let map = DeconvolvedMap {
            values: spec.magnitude.clone(),
            h: spec.n_bins,
            w: spec.n_frames,
            source: DeconvRequest {
                layer: 1,
                feature: 0,
                keep: Keep::All,
            },
        };
        let back = auralise(&map, &spec.phase, &StftParams::default()).map_err(|e| e.to_string())?;
        let lo = 512;
        let hi = signal.len().min(back.len()) - 512;
        let snr = snr_db(&signal.samples[lo..hi], &back.samples[lo..hi]);
        if snr <= 60.0 {
            return Err(format!("seed {seed}: interior SNR {snr:.1} dB <= 60"));
        }
    }
    Ok(())
}

// --- criterion 3 -----------------------------------------------------------

fn criterion_3() -> Result<(), String> {
    let arch = Architecture {
        input_h: 12,
        input_w: 12,
        conv_channels: vec![4, 4],
        hidden: 8,
        class_names: vec!["a".into(), "b".into(), "c".into()],
        dropout_rate: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let model = CnnModel::new(arch, &mut rng).map_err(|e| e.to_string())?;
    let input: Vec<f64> = (0..144).map(|_| rng.gen_range(0.0..1.0)).collect();
    let label = 1;

    let trace = model.forward(&input).map_err(|e| e.to_string())?;
    let adjoints: Vec<ConvLayer> = model.conv_layers.iter().map(|l| l.adjoint()).collect();
    let (grads, _) = backward(&model, &trace, None, label, &adjoints).map_err(|e| e.to_string())?;

    let loss_at = |params: &[f64]| -> f64 {
        let mut m = model.clone();
        m.set_flat_params(params).unwrap();
        cross_entropy(&m.forward(&input).unwrap(), label)
    };
    let base = model.flat_params();
    let eps = 1e-4;
    let mut worst = 0.0f64;
    for i in 0..base.len() {
        let mut up = base.clone();
        up[i] += eps;
        let mut down = base.clone();
        down[i] -= eps;
        let fd = (loss_at(&up) - loss_at(&down)) / (2.0 * eps);
        let rel = (grads.flat[i] - fd).abs() / (1e-8 + grads.flat[i].abs().max(fd.abs()));
        if fd.abs() > 1e-10 || grads.flat[i].abs() > 1e-10 {
            worst = worst.max(rel);
        }
    }
    if worst >= 1e-3 {
        return Err(format!("max relative gradient error {worst:.2e} >= 1e-3"));
    }
    Ok(())
}

// --- criterion 4 -----------------------------------------------------------

fn random_tensor(c: usize, h: usize, w: usize, seed: u64, lo: f64) -> Tensor3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor3::from_vec(c, h, w, (0..c * h * w).map(|_| rng.gen_range(lo..1.0)).collect()).unwrap()
}

fn random_conv(in_ch: usize, out_ch: usize, seed: u64) -> ConvLayer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layer = ConvLayer::zeros(in_ch, out_ch);
    for w in layer.weights.iter_mut() {
        *w = rng.gen_range(-1.0..1.0);
    }
    for b in layer.bias.iter_mut() {
        *b = rng.gen_range(-1.0..1.0);
    }
    layer
}

fn criterion_4() -> Result<(), String> {
    // (a) pool -> unpool right inverse, exact, 100 nonnegative tensors.
    for seed in 0..100 {
        let x = random_tensor(3, 8, 6, 2000 + seed, 0.0);
        let (pooled, switches) = maxpool2x2(&x);
        let up = unpool(&pooled, &switches, (8, 6)).map_err(|e| e.to_string())?;
        let (repooled, _) = maxpool2x2(&up);
        if repooled.data != pooled.data {
            return Err(format!("(a) seed {seed}: re-pool differs"));
        }
    }
    // (b) adjoint inner-product identity to 1e-5, 100 cases.
    for seed in 0..100 {
        let layer = random_conv(3, 4, 3000 + seed);
        let x = random_tensor(3, 9, 7, 4000 + seed, -1.0);
        let y = random_tensor(4, 9, 7, 5000 + seed, -1.0);
        let cx = conv2d_same(&x, &layer).map_err(|e| e.to_string())?;
        let ty = transpose_conv(&y, &layer).map_err(|e| e.to_string())?;
        let mut lhs = 0.0;
        for oc in 0..4 {
            for (v, yv) in cx.plane(oc).iter().zip(y.plane(oc)) {
                lhs += (v - layer.bias[oc]) * yv;
            }
        }
        let rhs: f64 = x.data.iter().zip(&ty.data).map(|(a, b)| a * b).sum();
        if (lhs - rhs).abs() > 1e-5 * (1.0 + lhs.abs()) {
            return Err(format!("(b) seed {seed}: <conv x, y> = {lhs} vs <x, tconv y> = {rhs}"));
        }
    }
    // (c) ReLUs bypassed: starting the projection from an indicator over the
    // selected activations yields the input gradient of their sum.
    let arch = Architecture {
        input_h: 16,
        input_w: 16,
        conv_channels: vec![4, 4],
        hidden: 8,
        class_names: vec!["a".into(), "b".into(), "c".into()],
        dropout_rate: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut model = CnnModel::new(arch, &mut rng).map_err(|e| e.to_string())?;
    model.activation = Activation::Identity;
    let mut input: Vec<f64> = (0..256).map(|_| rng.gen_range(0.5..1.0)).collect();
    // Pin the maximum so perturbations never change the input normalization.
    input[0] = 1.5;
    let max = 1.5;
    let req = DeconvRequest {
        layer: 2,
        feature: 1,
        keep: Keep::All,
    };
    let mut trace = model.forward(&input).map_err(|e| e.to_string())?;
    trace.post_pool[1].plane_mut(req.feature).fill(1.0);
    let map = deconv_feature(&model, &trace, &req).map_err(|e| e.to_string())?;
    let sum_selected = |inp: &[f64]| -> f64 {
        let t = model.forward(inp).unwrap();
        t.post_pool[1].plane(req.feature).iter().sum()
    };
    let eps = 1e-4;
    for i in 1..256 {
        let mut up = input.clone();
        up[i] += eps;
        let mut down = input.clone();
        down[i] -= eps;
        let fd = (sum_selected(&up) - sum_selected(&down)) / (2.0 * eps) * max;
        if (map.values[i] - fd).abs() > 1e-4 * (1.0 + fd.abs()) {
            return Err(format!(
                "(c) pixel {i}: map {} vs finite difference {fd}",
                map.values[i]
            ));
        }
    }
    Ok(())
}

// --- criterion 5 -----------------------------------------------------------

fn criterion_5(data: &Path, run: &Path) -> Result<(), String> {
    run_ok(
        bin()
            .args(["synth-dataset", "--clips-per-class", "70", "--val-per-class", "20"])
            .args(["--seed", "7", "--out"])
            .arg(data),
    )?;
    let stdout = run_ok(
        bin()
            .args(["train", "--width", "8", "--hidden", "32", "--epochs", "30"])
            .args(["--target-val-acc", "0.9", "--seed", "7"])
            .arg("--data")
            .arg(data)
            .arg("--out")
            .arg(run),
    )?;
    if !stdout.contains("150 train / 60 validation") {
        return Err("dataset split is not 150 train / 60 validation".into());
    }
    let log = std::fs::read_to_string(run.join("training_log.csv"))
        .map_err(|e| format!("training log: {e}"))?;
    let rows: Vec<&str> = log.lines().skip(1).filter(|l| !l.is_empty()).collect();
    if rows.is_empty() || rows.len() > 30 {
        return Err(format!("{} epochs recorded, expected 1..=30", rows.len()));
    }
    let last: Vec<&str> = rows.last().unwrap().split(',').collect();
    let val_acc: f64 = last[4].parse().map_err(|e| format!("val_acc: {e}"))?;
    if val_acc < 0.90 {
        return Err(format!(
            "validation accuracy {val_acc} < 0.90 after {} epochs",
            rows.len()
        ));
    }
    Ok(())
}

// --- criterion 6 -----------------------------------------------------------

fn check_sine_pitches(corpus: &Path) -> Result<(), String> {
    for spec in all_specs()
        .into_iter()
        .filter(|s| s.instrument == Instrument::PureSine)
    {
        let buf = read_wav(&corpus.join(format!("{}.wav", spec.stem()))).map_err(|e| e.to_string())?;
        let tf = stft(&buf, 512, 256).map_err(|e| e.to_string())?;
        // Average the first hit's frames.
        let frames = 7350 / 256;
        let avg: Vec<f64> = (0..tf.n_bins)
            .map(|b| (1..frames).map(|t| tf.mag(b, t)).sum::<f64>() / (frames - 1) as f64)
            .collect();
        let global_max = avg.iter().cloned().fold(0.0f64, f64::max);
        for midi in chord_notes(spec.chord, spec.key.midi()).map_err(|e| e.to_string())? {
            let f = auralis_core::synth::note_freq(midi).map_err(|e| e.to_string())?;
            let expect = (f / tf.bin_hz() + 0.5) as usize;
            let near = (expect.saturating_sub(1)..=expect + 1)
                .map(|b| avg[b])
                .fold(0.0f64, f64::max);
            if near <= 0.15 * global_max {
                return Err(format!(
                    "{}: note {midi} has no peak within one bin of {expect}",
                    spec.stem()
                ));
            }
        }
    }
    Ok(())
}

fn parse_correlation(csv: &str) -> Result<Vec<(String, usize, f64, usize, usize)>, String> {
    csv.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(format!("bad correlation row: {line}"));
            }
            Ok((
                f[0].to_string(),
                f[1].parse().map_err(|e| format!("layer: {e}"))?,
                f[2].parse().map_err(|e| format!("mean: {e}"))?,
                f[4].parse().map_err(|e| format!("n_pairs: {e}"))?,
                f[5].parse().map_err(|e| format!("n_skipped: {e}"))?,
            ))
        })
        .collect()
}

fn criterion_6(model: &Path, corpus: &Path, corr1: &Path, corr2: &Path) -> Result<(), String> {
    run_ok(bin().args(["model-signals", "--out"]).arg(corpus))?;
    let wavs: Vec<PathBuf> = std::fs::read_dir(corpus)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "wav"))
        .collect();
    if wavs.len() != 224 {
        return Err(format!("{} corpus files, expected 224", wavs.len()));
    }
    for path in &wavs {
        let buf = read_wav(path).map_err(|e| e.to_string())?;
        if buf.len() != 44_100 {
            return Err(format!("{}: {} samples, expected 44100", path.display(), buf.len()));
        }
    }
    check_sine_pitches(corpus)?;

    let features_per_layer = 2usize;
    for out in [corr1, corr2] {
        run_ok(
            bin()
                .args(["correlate", "--features", "2", "--seed", "7", "--model"])
                .arg(model)
                .arg("--out")
                .arg(out),
        )?;
    }
    let a = std::fs::read(corr1.join("correlation.csv")).map_err(|e| e.to_string())?;
    let b = std::fs::read(corr2.join("correlation.csv")).map_err(|e| e.to_string())?;
    if a != b {
        return Err("two correlate runs with the same seed differ".into());
    }
    let rows = parse_correlation(std::str::from_utf8(&a).map_err(|e| e.to_string())?)?;
    if rows.len() != 15 {
        return Err(format!("{} correlation rows, expected 15", rows.len()));
    }
    for (attribute, layer, mean, n_pairs, n_skipped) in &rows {
        if !(-1.0..=1.0).contains(mean) {
            return Err(format!("{attribute} layer {layer}: mean {mean} outside [-1, 1]"));
        }
        // Pair bookkeeping: cells x pairs-per-cell x features, with key cells
        // holding 4 signals (6 pairs), chord 8 (28), instrument 7 (21).
        let (cells, per_cell) = match attribute.as_str() {
            "key" => (56, 6),
            "chord" => (28, 28),
            "instrument" => (32, 21),
            other => return Err(format!("unknown attribute '{other}'")),
        };
        let expect = cells * per_cell * features_per_layer;
        if n_pairs + n_skipped != expect {
            return Err(format!(
                "{attribute} layer {layer}: {n_pairs} + {n_skipped} pairs != {expect}"
            ));
        }
    }
    Ok(())
}

// --- criterion 7 -----------------------------------------------------------

fn criterion_7() -> Result<(), String> {
    // Identity: unmodified magnitude + original phase reproduces the input.
    let signal = random_signal(44_100, 99);
    let spec = stft(&signal, 512, 256).map_err(|e| e.to_string())?;
    let map = DeconvolvedMap {
        values: spec.magnitude.clone(),
        h: spec.n_bins,
        w: spec.n_frames,
        source: DeconvRequest {
            layer: 1,
            feature: 0,
            keep: Keep::All,
        },
    };
    let back = auralise(&map, &spec.phase, &StftParams::default()).map_err(|e| e.to_string())?;
    let lo = 512;
    let hi = signal.len().min(back.len()) - 512;
    let snr = snr_db(&signal.samples[lo..hi], &back.samples[lo..hi]);
    if snr <= 60.0 {
        return Err(format!("identity SNR {snr:.1} dB <= 60"));
    }

    // Silence: a feature that never activates projects to digital zero.
    let arch = Architecture {
        input_h: 257,
        input_w: 171,
        conv_channels: vec![2, 2],
        hidden: 8,
        class_names: vec!["a".into(), "b".into(), "c".into()],
        dropout_rate: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let mut model = CnnModel::new(arch, &mut rng).map_err(|e| e.to_string())?;
    {
        let layer = &mut model.conv_layers[1];
        for ic in 0..layer.in_ch {
            for kr in 0..KERNEL {
                for kc in 0..KERNEL {
                    *layer.weight_mut(0, ic, kr, kc) = -1.0;
                }
            }
        }
        layer.bias[0] = -10.0;
    }
    let clip = random_signal(44_100, 7);
    let tf = stft(&clip, 512, 256).map_err(|e| e.to_string())?;
    let trace = model.forward(&tf.magnitude).map_err(|e| e.to_string())?;
    let dead = deconv_feature(
        &model,
        &trace,
        &DeconvRequest {
            layer: 2,
            feature: 0,
            keep: Keep::All,
        },
    )
    .map_err(|e| e.to_string())?;
    let audio = auralise(&dead, &tf.phase, &StftParams::default()).map_err(|e| e.to_string())?;
    if !audio.samples.iter().all(|&s| s == 0.0) {
        return Err("never-activated feature did not auralise to digital silence".into());
    }
    Ok(())
}

// --- criterion 8 (informational) ------------------------------------------

fn criterion_8(corr: &Path) {
    let Ok(csv) = std::fs::read_to_string(corr.join("correlation.csv")) else {
        println!("criterion 8 (layer trend): INFO — no correlation output to inspect");
        return;
    };
    let Ok(rows) = parse_correlation(&csv) else {
        println!("criterion 8 (layer trend): INFO — could not parse correlation output");
        return;
    };
    for attribute in [Attribute::Chord, Attribute::Instrument] {
        let name = attribute.name();
        let mut by_layer: Vec<(usize, f64)> = rows
            .iter()
            .filter(|r| r.0 == name)
            .map(|r| (r.1, r.2))
            .collect();
        by_layer.sort_by_key(|r| r.0);
        if let (Some(first), Some(last)) = (by_layer.first(), by_layer.last()) {
            let direction = if last.1 > first.1 { "rises" } else { "does not rise" };
            println!(
                "criterion 8 (layer trend): INFO — {name} mean correlation {direction} \
                 from layer {} ({:.3}) to layer {} ({:.3}); not a pass/fail gate",
                first.0, first.1, last.0, last.1
            );
        }
    }
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let run = dir.path().join("run");
    let corpus = dir.path().join("corpus");
    let corr1 = dir.path().join("corr1");
    let corr2 = dir.path().join("corr2");

    let mut gate = Gate { failures: Vec::new() };
    let budget = Duration::from_secs;

    let t = Instant::now();
    let r = criterion_1();
    gate.report(1, "receptive-field table", t.elapsed(), budget(1), r);

    let t = Instant::now();
    let r = criterion_2();
    gate.report(2, "STFT round trip", t.elapsed(), budget(5), r);

    let t = Instant::now();
    let r = criterion_3();
    gate.report(3, "gradient correctness", t.elapsed(), budget(30), r);

    let t = Instant::now();
    let r = criterion_4();
    gate.report(4, "deconvnet oracles", t.elapsed(), budget(60), r);

    let t = Instant::now();
    let r = criterion_5(&data, &run);
    gate.report(5, "training sanity", t.elapsed(), budget(15 * 60), r);

    let t = Instant::now();
    let r = criterion_6(&run.join("model.bin"), &corpus, &corr1, &corr2);
    gate.report(6, "corpus and study integrity", t.elapsed(), budget(30 * 60), r);

    let t = Instant::now();
    let r = criterion_7();
    gate.report(7, "auralisation identity", t.elapsed(), budget(10), r);

    criterion_8(&corr1);

    assert!(
        gate.failures.is_empty(),
        "acceptance failures:\n{}",
        gate.failures.join("\n")
    );
}
