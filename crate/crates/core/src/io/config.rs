//! Flat key-value run configuration named after the hyperparameter table.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::{PadMode, StftConfig, WindowKind};
use crate::encoders::PreprocessConfig;
use crate::error::{Error, Result};
use crate::model::{Branches, ModelConfig};
use crate::training::{AugmentConfig, TrainConfig};

/// How representations are scaled before entering the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureNormKind {
    /// Raw values.
    None,
    /// Per-layer, per-feature standardization fitted on the training split.
    Global,
    /// Each utterance's features shifted to zero mean over time.
    Utterance,
}

/// Every key is optional in the file; missing keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    // training
    pub batch_size: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub weight_decay: f64,
    pub early_stop: bool,
    pub limit_start: usize,
    pub limit_stop: usize,
    pub seed: u64,
    // model
    pub window_ms: f64,
    pub hop_ms: f64,
    pub n_fft: usize,
    pub window_type: WindowKind,
    pub pad_type: PadMode,
    pub dropout: f64,
    pub prune_pct: f64,
    pub branches: Branches,
    pub attn_hidden: usize,
    pub embed_dim: usize,
    pub leaky_slope: f64,
    // augmentation
    pub augment: bool,
    pub prob_noise: f64,
    pub prob_reverb: f64,
    pub snr_min: f64,
    pub snr_max: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    // front end
    pub feature_norm: FeatureNormKind,
    pub n_mels: usize,
    pub sample_rate: u32,
    pub max_duration_s: f64,
    pub min_duration_s: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        let m = ModelConfig::default();
        let a = AugmentConfig::default();
        let p = PreprocessConfig::default();
        Self {
            batch_size: t.batch_size,
            lr_start: t.lr_start,
            lr_end: t.lr_end,
            epochs: t.epochs,
            beta1: t.beta1,
            beta2: t.beta2,
            adam_eps: t.adam_eps,
            weight_decay: t.weight_decay,
            early_stop: t.early_stop,
            limit_start: t.warmup_epochs,
            limit_stop: t.patience,
            seed: 0,
            window_ms: m.stft.window_ms,
            hop_ms: m.stft.hop_ms,
            n_fft: m.stft.n_fft,
            window_type: m.stft.window_kind,
            pad_type: m.stft.pad,
            dropout: m.dropout,
            prune_pct: m.prune_pct,
            branches: m.branches,
            attn_hidden: m.attn_hidden,
            embed_dim: m.embed_dim,
            leaky_slope: m.leaky_slope,
            augment: a.enabled,
            prob_noise: a.prob_noise,
            prob_reverb: a.prob_reverb,
            snr_min: a.snr_min_db,
            snr_max: a.snr_max_db,
            speed_min: a.speed_min,
            speed_max: a.speed_max,
            feature_norm: FeatureNormKind::Utterance,
            n_mels: m.n_features,
            sample_rate: p.target_rate,
            max_duration_s: p.max_duration_s,
            min_duration_s: p.min_duration_s,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::format(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config().validate()?;
        self.preprocess_config().validate()?;
        self.model_config(1, self.n_mels.max(1)).validate()
    }

    pub fn stft(&self) -> StftConfig {
        StftConfig {
            window_ms: self.window_ms,
            hop_ms: self.hop_ms,
            n_fft: self.n_fft,
            window_kind: self.window_type,
            pad: self.pad_type,
        }
    }

    /// Model configuration for inputs with the given layer and feature counts.
    pub fn model_config(&self, n_layers: usize, n_features: usize) -> ModelConfig {
        ModelConfig {
            n_layers,
            n_features,
            attn_hidden: self.attn_hidden,
            embed_dim: self.embed_dim,
            branches: self.branches,
            dropout: self.dropout,
            leaky_slope: self.leaky_slope,
            prune_pct: self.prune_pct,
            stft: self.stft(),
            seed: self.seed,
        }
    }

    pub fn augment_config(&self) -> AugmentConfig {
        AugmentConfig {
            enabled: self.augment,
            prob_noise: self.prob_noise,
            prob_reverb: self.prob_reverb,
            snr_min_db: self.snr_min,
            snr_max_db: self.snr_max,
            speed_min: self.speed_min,
            speed_max: self.speed_max,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr_start: self.lr_start,
            lr_end: self.lr_end,
            beta1: self.beta1,
            beta2: self.beta2,
            adam_eps: self.adam_eps,
            weight_decay: self.weight_decay,
            early_stop: self.early_stop,
            warmup_epochs: self.limit_start,
            patience: self.limit_stop,
            augment: self.augment_config(),
            seed: self.seed,
        }
    }

    pub fn preprocess_config(&self) -> PreprocessConfig {
        PreprocessConfig {
            max_duration_s: self.max_duration_s,
            min_duration_s: self.min_duration_s,
            target_rate: self.sample_rate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_table() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!((c.lr_start, c.lr_end, c.epochs, c.batch_size), (1e-4, 1e-5, 30, 1));
        assert_eq!((c.limit_start, c.limit_stop), (2, 3));
        assert_eq!((c.window_ms, c.hop_ms, c.n_fft), (256.0, 64.0, 400));
        assert_eq!(c.dropout, 0.25);
        assert_eq!(
            (c.snr_min, c.snr_max, c.speed_min, c.speed_max),
            (0.0, 15.0, 0.95, 1.05)
        );
    }

    #[test]
    fn round_trip_and_overrides() {
        let c = RunConfig::from_toml("epochs = 5\nbranches = \"dynamics\"\nprune_pct = 0.9\n").unwrap();
        assert_eq!(c.epochs, 5);
        assert_eq!(c.branches, Branches::Dynamics);
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(matches!(RunConfig::from_toml("lr_begin = 1.0"), Err(Error::Format(_))));
        assert!(matches!(
            RunConfig::from_toml("lr_start = 1e-5\nlr_end = 1e-4"),
            Err(Error::InvalidArgument(_))
        ));
        assert!(RunConfig::from_toml("hop_ms = 300").is_err());
    }
}
