//! Synthetic audio: the 224-item model-signal corpus (instrument x chord x
//! key) and the 3-class genre dataset used for training.

mod chords;
mod corpus;
mod dataset;
mod render;
mod timbre;

pub use chords::{chord_notes, note_freq, ChordType, Key};
pub use corpus::{all_specs, model_signal, ModelSignalSpec, MODEL_SIGNAL_SAMPLES};
pub use dataset::{generate_genre_clips, generate_genre_dataset, GenreDatasetSpec, GENRE_CLASS_NAMES};
pub use render::{render_instrument, Adsr};
pub use timbre::{parse_timbres, Instrument, Timbre, TimbreSet};
