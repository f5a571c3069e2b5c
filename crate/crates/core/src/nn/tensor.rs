use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A channels x rows x cols activation/weight block, row-major within each
/// channel plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(c: usize, h: usize, w: usize) -> Self {
        Tensor3 {
            c,
            h,
            w,
            data: vec![0.0; c * h * w],
        }
    }

    pub fn from_vec(c: usize, h: usize, w: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != c * h * w {
            return Err(Error::Shape(alloc::format!(
                "tensor data length {} != {c}x{h}x{w}",
                data.len()
            )));
        }
        Ok(Tensor3 { c, h, w, data })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.c, self.h, self.w)
    }

    pub fn plane_len(&self) -> usize {
        self.h * self.w
    }

    pub fn plane(&self, ch: usize) -> &[f64] {
        let len = self.plane_len();
        &self.data[ch * len..(ch + 1) * len]
    }

    pub fn plane_mut(&mut self, ch: usize) -> &mut [f64] {
        let len = self.plane_len();
        &mut self.data[ch * len..(ch + 1) * len]
    }

    #[inline]
    pub fn get(&self, ch: usize, r: usize, c: usize) -> f64 {
        self.data[(ch * self.h + r) * self.w + c]
    }

    #[inline]
    pub fn set(&mut self, ch: usize, r: usize, c: usize, v: f64) {
        self.data[(ch * self.h + r) * self.w + c] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.data.iter_mut() {
            *v *= factor;
        }
    }
}
