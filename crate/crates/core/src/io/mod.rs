//! Files on disk: run configuration, dataset manifests, checkpoints, audio
//! and the synthetic corpus generator.

pub mod audio;
pub mod checkpoint;
pub mod config;
pub mod manifest;
pub mod synth;

pub use audio::{read_wav, write_wav};
pub use checkpoint::{Checkpoint, WRXC_MAGIC, WRXC_VERSION};
pub use config::{FeatureNormKind, RunConfig};
pub use manifest::{parse_manifest, parse_manifest_str, DatasetManifest, Record, Split, MANIFEST_HEADER};
pub use synth::{apply_tilt, generate_synthetic, synth_utterance, Carrier, SyntheticCorpusSpec};
