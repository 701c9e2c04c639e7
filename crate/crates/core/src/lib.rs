//! Speech health diagnostics built on modulation dynamics of temporal
//! speech representations.
//!
//! The pipeline turns audio (or precomputed encoder hidden states) into a
//! layered temporal representation, aggregates its layers, derives
//! per-feature modulation spectra, pools both views with attentive
//! statistics and fuses them into a health embedding with a single
//! decision logit. Training, evaluation metrics and interpretability tools
//! (F-ratio maps, embedding sparsity, layer importance, speaker-leakage
//! probe) live alongside.

pub mod analysis;
pub mod cli;
pub mod dsp;
pub mod dynamics;
pub mod encoders;
pub mod error;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod training;

pub use error::{Error, Result};
