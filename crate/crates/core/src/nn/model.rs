use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::layers::{
    conv2d_same, dense_forward, maxpool2x2, relu_inplace, softmax, ConvLayer, DenseLayer,
    SwitchRecord,
};
use super::tensor::Tensor3;
use crate::error::{Error, Result};

/// Nonlinearity applied after every conv and the hidden dense layer.
/// `Identity` exists for the linearized deconvolution checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// Hyper-shape of a [`CnnModel`]: every conv layer is 3x3 same-padded and
/// followed by 2x2/stride-2 max pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub input_h: usize,
    pub input_w: usize,
    /// Output channels of each conv layer, in order.
    pub conv_channels: Vec<usize>,
    pub hidden: usize,
    pub class_names: Vec<String>,
    pub dropout_rate: f64,
}

impl Architecture {
    /// The published configuration: 5 conv layers of 64 maps over a
    /// 257x171 magnitude spectrogram, hidden dense 256, 3 classes,
    /// dropout 0.5.
    pub fn full(class_names: Vec<String>) -> Self {
        Architecture {
            input_h: 257,
            input_w: 171,
            conv_channels: vec![64; 5],
            hidden: 256,
            class_names,
            dropout_rate: 0.5,
        }
    }

    /// Spatial dims seen by conv layer `l` (0-based), i.e. after `l` pools.
    pub fn dims_at(&self, l: usize) -> (usize, usize) {
        let mut h = self.input_h;
        let mut w = self.input_w;
        for _ in 0..l {
            h /= 2;
            w /= 2;
        }
        (h, w)
    }

    pub fn flatten_dim(&self) -> usize {
        let n = self.conv_channels.len();
        let (h, w) = self.dims_at(n);
        self.conv_channels[n - 1] * h * w
    }
}

/// The ordered layer stack with learnable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub arch: Architecture,
    pub conv_layers: Vec<ConvLayer>,
    pub dense_hidden: DenseLayer,
    pub dense_out: DenseLayer,
    pub activation: Activation,
}

/// Everything one forward pass produces, including the pooling switches the
/// deconvolution path replays.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Max-normalized input, shape (1, H, W).
    pub input: Tensor3,
    /// Post-activation, pre-pool feature maps per conv layer.
    pub pre_pool: Vec<Tensor3>,
    /// Post-pool maps (after dropout when training) per conv layer.
    pub post_pool: Vec<Tensor3>,
    pub switches: Vec<SwitchRecord>,
    pub flatten: Vec<f64>,
    pub hidden_act: Vec<f64>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

/// Inverted-dropout masks captured during a training-mode pass; each entry
/// is 0 or `1/(1-p)`.
#[derive(Debug, Clone)]
pub struct DropoutMasks {
    pub conv: Vec<Vec<f64>>,
    pub hidden: Vec<f64>,
}

impl CnnModel {
    /// He-uniform initialization, deterministic per seed.
    pub fn new<R: Rng>(arch: Architecture, rng: &mut R) -> Result<Self> {
        if arch.conv_channels.is_empty() {
            return Err(Error::InvalidArgument("at least one conv layer".into()));
        }
        if arch.class_names.is_empty() {
            return Err(Error::InvalidArgument("at least one class".into()));
        }
        let n = arch.conv_channels.len();
        let (h, w) = arch.dims_at(n);
        if h == 0 || w == 0 {
            return Err(Error::InvalidArgument(
                "input too small for the pooling chain".into(),
            ));
        }
        let mut conv_layers = Vec::with_capacity(n);
        let mut in_ch = 1;
        for &out_ch in &arch.conv_channels {
            let mut layer = ConvLayer::zeros(in_ch, out_ch);
            let limit = libm::sqrt(6.0 / (in_ch * 9) as f64);
            for wv in layer.weights.iter_mut() {
                *wv = rng.gen_range(-limit..limit);
            }
            conv_layers.push(layer);
            in_ch = out_ch;
        }
        let flatten = arch.flatten_dim();
        let mut dense_hidden = DenseLayer::zeros(flatten, arch.hidden);
        let limit = libm::sqrt(6.0 / flatten as f64);
        for wv in dense_hidden.weights.iter_mut() {
            *wv = rng.gen_range(-limit..limit);
        }
        let mut dense_out = DenseLayer::zeros(arch.hidden, arch.class_names.len());
        let limit = libm::sqrt(6.0 / arch.hidden as f64);
        for wv in dense_out.weights.iter_mut() {
            *wv = rng.gen_range(-limit..limit);
        }
        Ok(CnnModel {
            arch,
            conv_layers,
            dense_hidden,
            dense_out,
            activation: Activation::Relu,
        })
    }

    pub fn num_conv_layers(&self) -> usize {
        self.conv_layers.len()
    }

    /// Scale-free input: each spectrogram is divided by its own max
    /// (all-zero inputs pass through unchanged).
    pub fn normalize_input(&self, magnitude: &[f64]) -> Result<Tensor3> {
        let (h, w) = (self.arch.input_h, self.arch.input_w);
        if magnitude.len() != h * w {
            return Err(Error::Shape(alloc::format!(
                "input length {} != {h}x{w}",
                magnitude.len()
            )));
        }
        let max = magnitude.iter().fold(0.0f64, |m, &v| m.max(libm::fabs(v)));
        let data = if max > 0.0 {
            magnitude.iter().map(|v| v / max).collect()
        } else {
            magnitude.to_vec()
        };
        Tensor3::from_vec(1, h, w, data)
    }

    fn activate(&self, x: &mut Tensor3) {
        if self.activation == Activation::Relu {
            relu_inplace(x);
        }
    }

    /// Inference-mode forward pass; dropout is the identity here.
    pub fn forward(&self, magnitude: &[f64]) -> Result<ForwardTrace> {
        self.forward_impl::<rand_chacha::ChaCha8Rng>(magnitude, None)
            .map(|(trace, _)| trace)
    }

    /// Training-mode forward pass with inverted dropout after every pool and
    /// after the hidden dense layer.
    pub fn forward_train<R: Rng>(
        &self,
        magnitude: &[f64],
        rng: &mut R,
    ) -> Result<(ForwardTrace, DropoutMasks)> {
        let (trace, masks) = self.forward_impl(magnitude, Some(rng))?;
        Ok((trace, masks.expect("training pass produces masks")))
    }

    fn forward_impl<R: Rng>(
        &self,
        magnitude: &[f64],
        mut rng: Option<&mut R>,
    ) -> Result<(ForwardTrace, Option<DropoutMasks>)> {
        let input = self.normalize_input(magnitude)?;
        let p = self.arch.dropout_rate;
        let keep_scale = 1.0 / (1.0 - p);

        let mut pre_pool = Vec::with_capacity(self.conv_layers.len());
        let mut post_pool = Vec::with_capacity(self.conv_layers.len());
        let mut switches = Vec::with_capacity(self.conv_layers.len());
        let mut conv_masks = Vec::new();

        let mut x = input.clone();
        for layer in &self.conv_layers {
            let mut act = conv2d_same(&x, layer)?;
            self.activate(&mut act);
            let (mut pooled, sw) = maxpool2x2(&act);
            if let Some(rng) = rng.as_mut() {
                let mask: Vec<f64> = (0..pooled.data.len())
                    .map(|_| if rng.gen_bool(1.0 - p) { keep_scale } else { 0.0 })
                    .collect();
                for (v, m) in pooled.data.iter_mut().zip(&mask) {
                    *v *= m;
                }
                conv_masks.push(mask);
            }
            pre_pool.push(act);
            switches.push(sw);
            post_pool.push(pooled.clone());
            x = pooled;
        }

        let flatten = x.data.clone();
        let mut hidden = dense_forward(&flatten, &self.dense_hidden)?;
        if self.activation == Activation::Relu {
            for v in hidden.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        let hidden_mask = if let Some(rng) = rng.as_mut() {
            let mask: Vec<f64> = (0..hidden.len())
                .map(|_| if rng.gen_bool(1.0 - p) { keep_scale } else { 0.0 })
                .collect();
            for (v, m) in hidden.iter_mut().zip(&mask) {
                *v *= m;
            }
            Some(mask)
        } else {
            None
        };
        let logits = dense_forward(&hidden, &self.dense_out)?;
        let probs = softmax(&logits);

        let masks = hidden_mask.map(|hidden| DropoutMasks {
            conv: conv_masks,
            hidden,
        });
        Ok((
            ForwardTrace {
                input,
                pre_pool,
                post_pool,
                switches,
                flatten,
                hidden_act: hidden,
                logits,
                probs,
            },
            masks,
        ))
    }

    // --- Flat parameter access -------------------------------------------
    //
    // The flat order is the serialization order of the weight file: per conv
    // layer weights [out][in][3][3] then bias [out], then hidden dense
    // weights [out][in] and bias, then output dense weights and bias.

    pub fn num_params(&self) -> usize {
        let conv: usize = self
            .conv_layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum();
        conv + self.dense_hidden.weights.len()
            + self.dense_hidden.bias.len()
            + self.dense_out.weights.len()
            + self.dense_out.bias.len()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for layer in &self.conv_layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
        }
        out.extend_from_slice(&self.dense_hidden.weights);
        out.extend_from_slice(&self.dense_hidden.bias);
        out.extend_from_slice(&self.dense_out.weights);
        out.extend_from_slice(&self.dense_out.bias);
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::Shape(alloc::format!(
                "parameter vector length {} != {}",
                params.len(),
                self.num_params()
            )));
        }
        let mut at = 0;
        let take = |dst: &mut [f64], at: &mut usize| {
            dst.copy_from_slice(&params[*at..*at + dst.len()]);
            *at += dst.len();
        };
        for layer in self.conv_layers.iter_mut() {
            take(&mut layer.weights, &mut at);
            take(&mut layer.bias, &mut at);
        }
        take(&mut self.dense_hidden.weights, &mut at);
        take(&mut self.dense_hidden.bias, &mut at);
        take(&mut self.dense_out.weights, &mut at);
        take(&mut self.dense_out.bias, &mut at);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_model(seed: u64) -> CnnModel {
        let arch = Architecture {
            input_h: 12,
            input_w: 12,
            conv_channels: vec![4, 4],
            hidden: 8,
            class_names: vec!["a".into(), "b".into(), "c".into()],
            dropout_rate: 0.5,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CnnModel::new(arch, &mut rng).unwrap()
    }

    #[test]
    fn full_architecture_shape_chain() {
        let arch = Architecture::full(vec!["x".into(), "y".into(), "z".into()]);
        let expected = [(257, 171), (128, 85), (64, 42), (32, 21), (16, 10), (8, 5)];
        for (l, want) in expected.iter().enumerate() {
            assert_eq!(arch.dims_at(l), *want);
        }
        assert_eq!(arch.flatten_dim(), 64 * 8 * 5);
    }

    #[test]
    fn zero_input_uniform_probabilities() {
        let mut model = toy_model(1);
        // Zero biases so the logits collapse to equality on zero input.
        for l in model.conv_layers.iter_mut() {
            l.bias.fill(0.0);
        }
        model.dense_hidden.bias.fill(0.0);
        model.dense_out.bias.fill(0.0);
        let trace = model.forward(&vec![0.0; 144]).unwrap();
        for p in &trace.probs {
            assert!((p - 1.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let model = toy_model(2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let input: Vec<f64> = (0..144).map(|_| rng.gen_range(0.0..1.0)).collect();
        let trace = model.forward(&input).unwrap();
        assert!((trace.probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn forward_matches_layer_by_layer_oracle() {
        use super::super::layers::{conv2d_same, dense_forward, maxpool2x2, relu, softmax};
        let model = toy_model(3);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let input: Vec<f64> = (0..144).map(|_| rng.gen_range(0.0..2.0)).collect();
        let trace = model.forward(&input).unwrap();

        // Independent recomputation straight from the layer primitives.
        let mut x = model.normalize_input(&input).unwrap();
        for layer in &model.conv_layers {
            let act = relu(&conv2d_same(&x, layer).unwrap());
            let (pooled, _) = maxpool2x2(&act);
            x = pooled;
        }
        let mut hidden = dense_forward(&x.data, &model.dense_hidden).unwrap();
        for v in hidden.iter_mut() {
            *v = v.max(0.0);
        }
        let logits = dense_forward(&hidden, &model.dense_out).unwrap();
        let probs = softmax(&logits);
        for (a, b) in trace.logits.iter().zip(&logits) {
            assert!((a - b).abs() < 1e-5);
        }
        for (a, b) in trace.probs.iter().zip(&probs) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn forward_rejects_wrong_shape() {
        let model = toy_model(4);
        assert!(model.forward(&vec![0.0; 100]).is_err());
    }

    #[test]
    fn flat_params_round_trip() {
        let model = toy_model(5);
        let params = model.flat_params();
        assert_eq!(params.len(), model.num_params());
        let mut other = toy_model(6);
        other.set_flat_params(&params).unwrap();
        assert_eq!(other.flat_params(), params);
    }

    #[test]
    fn infer_mode_does_not_mutate_model() {
        let model = toy_model(7);
        let before = model.flat_params();
        let input: Vec<f64> = (0..144).map(|i| i as f64).collect();
        let _ = model.forward(&input).unwrap();
        assert_eq!(model.flat_params(), before);
    }
}
