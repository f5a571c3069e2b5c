//! Radix-2 FFT over `f64` complex pairs.
//!
//! Sized for the STFT front end (power-of-two frames, 512 by default), so a
//! plain iterative Cooley-Tukey with precomputed twiddles is all that is
//! needed here.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One complex sample, interleaved nowhere: plain re/im pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    pub fn abs(self) -> f64 {
        libm::hypot(self.re, self.im)
    }

    pub fn arg(self) -> f64 {
        libm::atan2(self.im, self.re)
    }

    /// `r * e^{i theta}`.
    pub fn from_polar(r: f64, theta: f64) -> Complex {
        Complex {
            re: r * libm::cos(theta),
            im: r * libm::sin(theta),
        }
    }
}

impl core::ops::Mul for Complex {
    type Output = Complex;

    fn mul(self, other: Complex) -> Complex {
        Complex {
            re: self.re * other.re - self.im * other.im,
            im: self.re * other.im + self.im * other.re,
        }
    }
}

/// Forward/inverse FFT plan for one power-of-two size.
#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    // Twiddles for the forward direction, e^{-2 pi i k / n} for k < n/2.
    twiddles: Vec<Complex>,
    bit_rev: Vec<u32>,
}

impl Fft {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidArgument(alloc::format!(
                "FFT size must be a power of two >= 2, got {n}"
            )));
        }
        let twiddles = (0..n / 2)
            .map(|k| {
                let theta = -2.0 * core::f64::consts::PI * k as f64 / n as f64;
                Complex::new(libm::cos(theta), libm::sin(theta))
            })
            .collect();
        let bits = n.trailing_zeros();
        let bit_rev = (0..n as u32)
            .map(|i| i.reverse_bits() >> (32 - bits))
            .collect();
        Ok(Fft {
            n,
            twiddles,
            bit_rev,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place forward transform. `buf.len()` must equal the plan size.
    pub fn forward(&self, buf: &mut [Complex]) -> Result<()> {
        self.transform(buf, false)
    }

    /// In-place inverse transform, including the 1/n normalization.
    pub fn inverse(&self, buf: &mut [Complex]) -> Result<()> {
        self.transform(buf, true)?;
        let scale = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            v.re *= scale;
            v.im *= scale;
        }
        Ok(())
    }

    fn transform(&self, buf: &mut [Complex], inverse: bool) -> Result<()> {
        let n = self.n;
        if buf.len() != n {
            return Err(Error::Shape(alloc::format!(
                "FFT buffer length {} does not match plan size {n}",
                buf.len()
            )));
        }
        for i in 0..n {
            let j = self.bit_rev[i] as usize;
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let step = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * step];
                    if inverse {
                        w.im = -w.im;
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = Complex::new(a.re + b.re, a.im + b.im);
                    buf[start + k + half] = Complex::new(a.re - b.re, a.im - b.im);
                }
            }
            len *= 2;
        }
        Ok(())
    }
}
