//! Deconvnet projection: map any feature-map activation back to
//! input-spectrogram space by alternating unpooling (via recorded switches),
//! ReLU, and transposed convolution.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::nn::{relu_inplace, Activation, CnnModel, ConvLayer, ForwardTrace, SwitchRecord, Tensor3};

/// Which activations of the selected feature map to keep when projecting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    /// The whole feature map (the default; whole-excerpt responses).
    All,
    /// Only the k strongest activations, the rest zeroed.
    TopK(usize),
}

/// Addresses one feature map: `layer` is 1-based, `feature` 0-based,
/// mirroring the "Feature l-f" naming.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeconvRequest {
    pub layer: usize,
    pub feature: usize,
    pub keep: Keep,
}

/// The signed input-space projection of one feature.
#[derive(Debug, Clone)]
pub struct DeconvolvedMap {
    pub values: Vec<f64>,
    pub h: usize,
    pub w: usize,
    pub source: DeconvRequest,
}

impl DeconvolvedMap {
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Places each pooled value back at its recorded argmax coordinate; all other
/// cells are zero. `target` is the pre-pool (height, width).
pub fn unpool(pooled: &Tensor3, switches: &SwitchRecord, target: (usize, usize)) -> Result<Tensor3> {
    if pooled.c != switches.channels
        || pooled.h != switches.out_h
        || pooled.w != switches.out_w
    {
        return Err(Error::Shape(alloc::format!(
            "pooled tensor {}x{}x{} does not match switches {}x{}x{}",
            pooled.c,
            pooled.h,
            pooled.w,
            switches.channels,
            switches.out_h,
            switches.out_w
        )));
    }
    if target != (switches.in_h, switches.in_w) {
        return Err(Error::Shape(alloc::format!(
            "target shape {:?} does not match switch record {}x{}",
            target,
            switches.in_h,
            switches.in_w
        )));
    }
    let (h, w) = target;
    let mut out = Tensor3::zeros(pooled.c, h, w);
    let plane = h * w;
    let cells = switches.out_h * switches.out_w;
    for ch in 0..pooled.c {
        let src = pooled.plane(ch);
        let dst = &mut out.data[ch * plane..(ch + 1) * plane];
        let idx = &switches.idx[ch * cells..(ch + 1) * cells];
        for (cell, (&i, &v)) in idx.iter().zip(src).enumerate() {
            let i = i as usize;
            let (r, c) = (i / w, i % w);
            let (or, oc) = (cell / switches.out_w, cell % switches.out_w);
            if r / 2 != or || c / 2 != oc || r >= h || c >= w {
                return Err(Error::Corrupt(alloc::format!(
                    "switch ({r},{c}) outside pooling window of cell ({or},{oc})"
                )));
            }
            dst[i] = v;
        }
    }
    Ok(out)
}

/// Adjoint of `conv2d_same`: same-padded correlation with the kernel tensor
/// transposed in (in, out) and flipped in both spatial axes. No bias.
pub fn transpose_conv(input: &Tensor3, layer: &ConvLayer) -> Result<Tensor3> {
    if input.c != layer.out_ch {
        return Err(Error::Shape(alloc::format!(
            "transpose conv input has {} channels, layer produces {}",
            input.c,
            layer.out_ch
        )));
    }
    crate::nn::conv2d_same(input, &layer.adjoint())
}

fn masked_start(trace: &ForwardTrace, req: &DeconvRequest) -> Tensor3 {
    let src = &trace.post_pool[req.layer - 1];
    let mut start = Tensor3::zeros(src.c, src.h, src.w);
    start
        .plane_mut(req.feature)
        .copy_from_slice(src.plane(req.feature));
    if let Keep::TopK(k) = req.keep {
        let plane = start.plane_mut(req.feature);
        let mut order: Vec<usize> = (0..plane.len()).collect();
        order.sort_unstable_by(|&a, &b| {
            plane[b]
                .partial_cmp(&plane[a])
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        for &i in order.iter().skip(k) {
            plane[i] = 0.0;
        }
    }
    start
}

/// Projects the selected feature map of `trace` down to input space:
/// repeat [unpool with that layer's switches -> ReLU -> transpose conv]
/// from the requested layer through layer 1. The trace must come from an
/// inference-mode forward pass on the same model.
pub fn deconv_feature(
    model: &CnnModel,
    trace: &ForwardTrace,
    req: &DeconvRequest,
) -> Result<DeconvolvedMap> {
    let n = model.num_conv_layers();
    if req.layer < 1 || req.layer > n {
        return Err(Error::InvalidArgument(alloc::format!(
            "layer {} out of range 1..={n}",
            req.layer
        )));
    }
    let channels = model.conv_layers[req.layer - 1].out_ch;
    if req.feature >= channels {
        return Err(Error::InvalidArgument(alloc::format!(
            "feature {} out of range 0..{channels}",
            req.feature
        )));
    }
    if let Keep::TopK(0) = req.keep {
        return Err(Error::InvalidArgument("top-k with k = 0".into()));
    }

    let mut x = masked_start(trace, req);
    for l in (0..req.layer).rev() {
        let pre = &trace.pre_pool[l];
        x = unpool(&x, &trace.switches[l], (pre.h, pre.w))?;
        if model.activation == Activation::Relu {
            relu_inplace(&mut x);
        }
        x = transpose_conv(&x, &model.conv_layers[l])?;
    }
    debug_assert_eq!(x.c, 1);
    Ok(DeconvolvedMap {
        h: x.h,
        w: x.w,
        values: x.data,
        source: *req,
    })
}
