//! File formats and batch workflows around `auralis-core`: WAV I/O, model
//! serialization, map/CSV exports, configuration handling, and the pipelines
//! the `auralis` binary wires together.

pub mod config;
pub mod maps;
pub mod model_io;
pub mod pipeline;
pub mod report;
pub mod wav;
