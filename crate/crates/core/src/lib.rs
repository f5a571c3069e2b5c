//! Core algorithms for auralising a spectrogram CNN.
//!
//! The pipeline: take an audio signal, compute its STFT, run a small
//! genre-classification CNN over the magnitude, project any learnt feature
//! back to input-spectrogram space with a deconvnet (unpooling via switches,
//! ReLU, transposed convolution), then reapply the original phase and invert
//! the transform to obtain an audible signal. On top of that sits a synthetic
//! model-signal corpus (instrument x chord x key) and a per-layer pairwise
//! correlation study of feature robustness.
//!
//! This crate is `no_std` + `alloc`; all I/O (WAV, weight files, CSV, CLI)
//! lives in the companion `auralis` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod auralize;
pub mod deconv;
pub mod dsp;
pub mod error;
pub mod fft;
pub mod nn;
pub mod synth;

pub use error::Error;
