use alloc::vec;
use alloc::vec::Vec;

use super::tensor::Tensor3;
use crate::error::{Error, Result};

/// All convolutions in the network are 3x3.
pub const KERNEL: usize = 3;

/// A same-padded 3x3 convolution layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub in_ch: usize,
    pub out_ch: usize,
    /// `[out_ch][in_ch][3][3]`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn zeros(in_ch: usize, out_ch: usize) -> Self {
        ConvLayer {
            in_ch,
            out_ch,
            weights: vec![0.0; out_ch * in_ch * KERNEL * KERNEL],
            bias: vec![0.0; out_ch],
        }
    }

    #[inline]
    pub fn weight(&self, oc: usize, ic: usize, kr: usize, kc: usize) -> f64 {
        self.weights[((oc * self.in_ch + ic) * KERNEL + kr) * KERNEL + kc]
    }

    #[inline]
    pub fn weight_mut(&mut self, oc: usize, ic: usize, kr: usize, kc: usize) -> &mut f64 {
        &mut self.weights[((oc * self.in_ch + ic) * KERNEL + kr) * KERNEL + kc]
    }

    /// The adjoint layer: `(in, out)` swapped, both spatial axes flipped,
    /// zero bias. Convolving with it realizes the transpose of
    /// [`conv2d_same`].
    pub fn adjoint(&self) -> ConvLayer {
        let mut adj = ConvLayer::zeros(self.out_ch, self.in_ch);
        for oc in 0..self.out_ch {
            for ic in 0..self.in_ch {
                for kr in 0..KERNEL {
                    for kc in 0..KERNEL {
                        *adj.weight_mut(ic, oc, KERNEL - 1 - kr, KERNEL - 1 - kc) =
                            self.weight(oc, ic, kr, kc);
                    }
                }
            }
        }
        adj
    }
}

/// A fully connected layer, weights `[out][in]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        DenseLayer {
            in_dim,
            out_dim,
            weights: vec![0.0; out_dim * in_dim],
            bias: vec![0.0; out_dim],
        }
    }
}

/// Per-pooling-layer argmax bookkeeping: for every pooled output cell, the
/// pre-pool coordinate its value came from. This is the input-dependent state
/// the deconvolution path needs for exact unpooling.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchRecord {
    pub channels: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_h: usize,
    pub out_w: usize,
    /// `idx[ch * out_h * out_w + cell] = row * in_w + col` in the pre-pool plane.
    pub idx: Vec<u32>,
}

impl SwitchRecord {
    /// Source `(row, col)` in the pre-pool plane for one pooled cell.
    pub fn coord(&self, ch: usize, out_r: usize, out_c: usize) -> (usize, usize) {
        let v = self.idx[(ch * self.out_h + out_r) * self.out_w + out_c] as usize;
        (v / self.in_w, v % self.in_w)
    }
}

/// Same-padded cross-correlation plus per-channel bias.
///
/// Implemented as nine shifted row-axpy passes per (out, in) channel pair;
/// the inner loops are contiguous slices so they autovectorize. Input
/// channels whose plane is entirely zero are skipped, which makes the
/// single-channel starts of the deconvolution path cheap.
pub fn conv2d_same(input: &Tensor3, layer: &ConvLayer) -> Result<Tensor3> {
    if input.c != layer.in_ch {
        return Err(Error::Shape(alloc::format!(
            "conv input has {} channels, layer expects {}",
            input.c,
            layer.in_ch
        )));
    }
    let (h, w) = (input.h, input.w);
    let mut out = Tensor3::zeros(layer.out_ch, h, w);

    let live: Vec<bool> = (0..input.c)
        .map(|ic| input.plane(ic).iter().any(|&v| v != 0.0))
        .collect();

    for oc in 0..layer.out_ch {
        let out_plane = out.plane_mut(oc);
        out_plane.fill(layer.bias[oc]);
        for ic in 0..layer.in_ch {
            if !live[ic] {
                continue;
            }
            let in_plane = input.plane(ic);
            for kr in 0..KERNEL {
                let dr = kr as isize - 1;
                let r_lo = (-dr).max(0) as usize;
                let r_hi = (h as isize).min(h as isize - dr) as usize;
                for kc in 0..KERNEL {
                    let wv = layer.weight(oc, ic, kr, kc);
                    if wv == 0.0 {
                        continue;
                    }
                    let dc = kc as isize - 1;
                    let c_lo = (-dc).max(0) as usize;
                    let c_hi = (w as isize).min(w as isize - dc) as usize;
                    if c_lo >= c_hi {
                        continue;
                    }
                    for r in r_lo..r_hi {
                        let ir = (r as isize + dr) as usize;
                        let src_lo = (c_lo as isize + dc) as usize;
                        let src = &in_plane[ir * w + src_lo..ir * w + src_lo + (c_hi - c_lo)];
                        let dst = &mut out_plane[r * w + c_lo..r * w + c_hi];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += wv * s;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Elementwise `max(0, x)`.
pub fn relu(x: &Tensor3) -> Tensor3 {
    let mut out = x.clone();
    relu_inplace(&mut out);
    out
}

pub fn relu_inplace(x: &mut Tensor3) {
    for v in x.data.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// 2x2 max pooling with stride 2; odd trailing rows/cols are truncated.
/// Ties break to the first cell in row-major order.
pub fn maxpool2x2(x: &Tensor3) -> (Tensor3, SwitchRecord) {
    let (c, h, w) = x.shape();
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Tensor3::zeros(c, oh, ow);
    let mut idx = vec![0u32; c * oh * ow];
    for ch in 0..c {
        let plane = x.plane(ch);
        let out_plane = out.plane_mut(ch);
        for or in 0..oh {
            let r0 = 2 * or;
            for oc in 0..ow {
                let c0 = 2 * oc;
                let mut best = plane[r0 * w + c0];
                let mut best_at = (r0 * w + c0) as u32;
                for (rr, cc) in [(r0, c0 + 1), (r0 + 1, c0), (r0 + 1, c0 + 1)] {
                    let v = plane[rr * w + cc];
                    if v > best {
                        best = v;
                        best_at = (rr * w + cc) as u32;
                    }
                }
                out_plane[or * ow + oc] = best;
                idx[(ch * oh + or) * ow + oc] = best_at;
            }
        }
    }
    (
        out,
        SwitchRecord {
            channels: c,
            in_h: h,
            in_w: w,
            out_h: oh,
            out_w: ow,
            idx,
        },
    )
}

/// `y = W x + b`.
pub fn dense_forward(x: &[f64], layer: &DenseLayer) -> Result<Vec<f64>> {
    if x.len() != layer.in_dim {
        return Err(Error::Shape(alloc::format!(
            "dense input length {} != {}",
            x.len(),
            layer.in_dim
        )));
    }
    Ok((0..layer.out_dim)
        .map(|o| {
            let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
            layer.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
        })
        .collect())
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let exps: Vec<f64> = logits.iter().map(|&v| libm::exp(v - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}
