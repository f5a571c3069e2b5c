use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{conv2d_same, ConvLayer, KERNEL};
use super::model::{Activation, CnnModel, DropoutMasks, ForwardTrace};
use super::tensor::Tensor3;
use crate::error::{Error, Result};

/// One labeled magnitude spectrogram, flattened row-major.
#[derive(Debug, Clone)]
pub struct Sample {
    pub magnitude: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub train: Vec<Sample>,
    pub validation: Vec<Sample>,
}

#[derive(Debug, Clone)]
pub struct Hyper {
    pub lr: f64,
    pub momentum: f64,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Stop as soon as validation accuracy reaches this level.
    pub target_val_acc: Option<f64>,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            lr: 0.01,
            momentum: 0.9,
            batch: 16,
            epochs: 30,
            seed: 0,
            target_val_acc: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

/// Parameter gradients in the model's flat parameter order.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub flat: Vec<f64>,
}

impl Gradients {
    pub fn zeros(model: &CnnModel) -> Self {
        Gradients {
            flat: vec![0.0; model.num_params()],
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.flat.iter_mut() {
            *g *= factor;
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.flat.iter_mut().zip(&other.flat) {
            *a += b;
        }
    }
}

/// Offsets of each layer's weights/bias inside the flat parameter vector.
struct Layout {
    conv: Vec<(usize, usize)>,
    d1_w: usize,
    d1_b: usize,
    d2_w: usize,
    d2_b: usize,
}

fn layout(model: &CnnModel) -> Layout {
    let mut at = 0;
    let conv = model
        .conv_layers
        .iter()
        .map(|l| {
            let w = at;
            at += l.weights.len();
            let b = at;
            at += l.bias.len();
            (w, b)
        })
        .collect();
    let d1_w = at;
    let d1_b = d1_w + model.dense_hidden.weights.len();
    let d2_w = d1_b + model.dense_hidden.bias.len();
    let d2_b = d2_w + model.dense_out.weights.len();
    Layout {
        conv,
        d1_w,
        d1_b,
        d2_w,
        d2_b,
    }
}

/// Cross-entropy loss of one traced forward pass.
pub fn cross_entropy(trace: &ForwardTrace, label: usize) -> f64 {
    -libm::log(trace.probs[label].max(1e-300))
}

/// `dW`/`db` of one conv layer given its input and the gradient at its
/// output, via nine shifted row dot products per channel pair.
fn conv_weight_grads(
    input: &Tensor3,
    grad_out: &Tensor3,
    layer: &ConvLayer,
    dw: &mut [f64],
    db: &mut [f64],
) {
    let (h, w) = (input.h, input.w);
    for oc in 0..layer.out_ch {
        let g_plane = grad_out.plane(oc);
        db[oc] += g_plane.iter().sum::<f64>();
        for ic in 0..layer.in_ch {
            let in_plane = input.plane(ic);
            for kr in 0..KERNEL {
                let dr = kr as isize - 1;
                let r_lo = (-dr).max(0) as usize;
                let r_hi = (h as isize).min(h as isize - dr) as usize;
                for kc in 0..KERNEL {
                    let dc = kc as isize - 1;
                    let c_lo = (-dc).max(0) as usize;
                    let c_hi = (w as isize).min(w as isize - dc) as usize;
                    if c_lo >= c_hi {
                        continue;
                    }
                    let mut acc = 0.0;
                    for r in r_lo..r_hi {
                        let ir = (r as isize + dr) as usize;
                        let src_lo = (c_lo as isize + dc) as usize;
                        let g = &g_plane[r * w + c_lo..r * w + c_hi];
                        let x = &in_plane[ir * w + src_lo..ir * w + src_lo + (c_hi - c_lo)];
                        acc += g.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                    }
                    dw[((oc * layer.in_ch + ic) * KERNEL + kr) * KERNEL + kc] += acc;
                }
            }
        }
    }
}

/// Backpropagation for one sample. `masks` is `Some` for training-mode
/// traces and `None` for inference-mode ones (used by the gradient checks).
/// `adjoints` are the per-layer adjoint kernels, precomputed by the caller.
pub fn backward(
    model: &CnnModel,
    trace: &ForwardTrace,
    masks: Option<&DropoutMasks>,
    label: usize,
    adjoints: &[ConvLayer],
) -> Result<(Gradients, f64)> {
    let classes = model.arch.class_names.len();
    if label >= classes {
        return Err(Error::InvalidArgument(alloc::format!(
            "label {label} out of range for {classes} classes"
        )));
    }
    let lay = layout(model);
    let mut grads = Gradients::zeros(model);
    let loss = cross_entropy(trace, label);

    // Softmax + cross-entropy collapse to probs - onehot.
    let mut d_logits = trace.probs.clone();
    d_logits[label] -= 1.0;

    // Output dense layer.
    {
        let d2 = &model.dense_out;
        let dw = &mut grads.flat[lay.d2_w..lay.d2_w + d2.weights.len()];
        for o in 0..d2.out_dim {
            for i in 0..d2.in_dim {
                dw[o * d2.in_dim + i] += d_logits[o] * trace.hidden_act[i];
            }
        }
        let db = &mut grads.flat[lay.d2_b..lay.d2_b + d2.bias.len()];
        for (o, g) in d_logits.iter().enumerate() {
            db[o] += g;
        }
    }
    let mut d_hidden = vec![0.0; model.dense_out.in_dim];
    for o in 0..model.dense_out.out_dim {
        let row = &model.dense_out.weights[o * model.dense_out.in_dim..];
        for (i, dh) in d_hidden.iter_mut().enumerate() {
            *dh += row[i] * d_logits[o];
        }
    }
    if let Some(m) = masks {
        for (dh, f) in d_hidden.iter_mut().zip(&m.hidden) {
            *dh *= f;
        }
    }
    if model.activation == Activation::Relu {
        for (dh, a) in d_hidden.iter_mut().zip(&trace.hidden_act) {
            if *a <= 0.0 {
                *dh = 0.0;
            }
        }
    }

    // Hidden dense layer.
    {
        let d1 = &model.dense_hidden;
        let dw = &mut grads.flat[lay.d1_w..lay.d1_w + d1.weights.len()];
        for o in 0..d1.out_dim {
            if d_hidden[o] == 0.0 {
                continue;
            }
            let row = &mut dw[o * d1.in_dim..(o + 1) * d1.in_dim];
            for (r, x) in row.iter_mut().zip(&trace.flatten) {
                *r += d_hidden[o] * x;
            }
        }
        let db = &mut grads.flat[lay.d1_b..lay.d1_b + d1.bias.len()];
        for (o, g) in d_hidden.iter().enumerate() {
            db[o] += g;
        }
    }
    let mut d_flat = vec![0.0; model.dense_hidden.in_dim];
    for o in 0..model.dense_hidden.out_dim {
        if d_hidden[o] == 0.0 {
            continue;
        }
        let row = &model.dense_hidden.weights[o * model.dense_hidden.in_dim..];
        for (df, r) in d_flat.iter_mut().zip(row) {
            *df += r * d_hidden[o];
        }
    }

    // Back through the conv/pool stack.
    let n = model.conv_layers.len();
    let last = &trace.post_pool[n - 1];
    let mut g = Tensor3::from_vec(last.c, last.h, last.w, d_flat)?;
    for l in (0..n).rev() {
        if let Some(m) = masks {
            for (gv, f) in g.data.iter_mut().zip(&m.conv[l]) {
                *gv *= f;
            }
        }
        // Pool backward: each pooled gradient flows to its switch position.
        let sw = &trace.switches[l];
        let pre = &trace.pre_pool[l];
        let mut g_pre = Tensor3::zeros(pre.c, pre.h, pre.w);
        let plane = sw.in_h * sw.in_w;
        for ch in 0..sw.channels {
            let gp = g.plane(ch);
            let dst = &mut g_pre.data[ch * plane..(ch + 1) * plane];
            let idx = &sw.idx[ch * sw.out_h * sw.out_w..(ch + 1) * sw.out_h * sw.out_w];
            for (&i, &gv) in idx.iter().zip(gp) {
                dst[i as usize] += gv;
            }
        }
        if model.activation == Activation::Relu {
            for (gv, a) in g_pre.data.iter_mut().zip(&pre.data) {
                if *a <= 0.0 {
                    *gv = 0.0;
                }
            }
        }
        let input = if l == 0 {
            &trace.input
        } else {
            &trace.post_pool[l - 1]
        };
        let (w_off, b_off) = lay.conv[l];
        let layer = &model.conv_layers[l];
        {
            let (dw, rest) = grads.flat[w_off..].split_at_mut(layer.weights.len());
            let db = &mut rest[..layer.bias.len()];
            debug_assert_eq!(b_off, w_off + layer.weights.len());
            conv_weight_grads(input, &g_pre, layer, dw, db);
        }
        if l > 0 {
            g = conv2d_same(&g_pre, &adjoints[l])?;
        }
    }

    Ok((grads, loss))
}

/// Inference-mode evaluation: mean loss, accuracy, confusion matrix
/// (rows = true label, cols = prediction).
pub fn evaluate(model: &CnnModel, samples: &[Sample]) -> Result<(f64, f64, Vec<Vec<usize>>)> {
    let classes = model.arch.class_names.len();
    let mut confusion = vec![vec![0usize; classes]; classes];
    let mut loss = 0.0;
    let mut correct = 0usize;
    for s in samples {
        let trace = model.forward(&s.magnitude)?;
        loss += cross_entropy(&trace, s.label);
        let pred = argmax(&trace.probs);
        confusion[s.label][pred] += 1;
        if pred == s.label {
            correct += 1;
        }
    }
    let n = samples.len().max(1) as f64;
    Ok((loss / n, correct as f64 / n, confusion))
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Mini-batch SGD with momentum over cross-entropy. Deterministic given the
/// seed: shuffling, dropout, and summation order are all fixed.
pub fn train(model: &mut CnnModel, data: &Dataset, hyper: &Hyper) -> Result<Vec<EpochStats>> {
    if data.train.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let classes = model.arch.class_names.len();
    if let Some(bad) = data
        .train
        .iter()
        .chain(&data.validation)
        .find(|s| s.label >= classes)
    {
        return Err(Error::InvalidArgument(alloc::format!(
            "label {} out of range for {classes} classes",
            bad.label
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut velocity = vec![0.0; model.num_params()];
    let mut history = Vec::new();
    let batch = hyper.batch.max(1);

    for epoch in 0..hyper.epochs {
        let mut order: Vec<usize> = (0..data.train.len()).collect();
        // Fisher-Yates with the shared stream.
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }

        let mut adjoints: Vec<ConvLayer> =
            model.conv_layers.iter().map(|l| l.adjoint()).collect();
        let mut epoch_loss = 0.0;
        let mut epoch_correct = 0usize;

        for chunk in order.chunks(batch) {
            let mut grads = Gradients::zeros(model);
            for &i in chunk {
                let sample = &data.train[i];
                let (trace, masks) = model.forward_train(&sample.magnitude, &mut rng)?;
                let (g, loss) = backward(model, &trace, Some(&masks), sample.label, &adjoints)?;
                if !loss.is_finite() {
                    return Err(Error::Diverged { epoch });
                }
                epoch_loss += loss;
                if argmax(&trace.probs) == sample.label {
                    epoch_correct += 1;
                }
                grads.add_assign(&g);
            }
            grads.scale(1.0 / chunk.len() as f64);

            let mut params = model.flat_params();
            for ((p, v), g) in params.iter_mut().zip(&mut velocity).zip(&grads.flat) {
                *v = hyper.momentum * *v - hyper.lr * g;
                *p += *v;
            }
            model.set_flat_params(&params)?;
            adjoints = model.conv_layers.iter().map(|l| l.adjoint()).collect();
        }

        let n = data.train.len() as f64;
        let (val_loss, val_acc, _) = if data.validation.is_empty() {
            (0.0, 0.0, Vec::new())
        } else {
            evaluate(model, &data.validation)?
        };
        let stats = EpochStats {
            epoch,
            train_loss: epoch_loss / n,
            train_acc: epoch_correct as f64 / n,
            val_loss,
            val_acc,
        };
        if !stats.train_loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let reached = hyper
            .target_val_acc
            .map(|t| !data.validation.is_empty() && stats.val_acc >= t)
            .unwrap_or(false);
        history.push(stats);
        if reached {
            break;
        }
    }
    Ok(history)
}
