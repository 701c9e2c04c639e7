//! Supervised training of the diagnostic head: loss, optimizer, learning-rate
//! schedule, early stopping and waveform augmentation.

mod augment;
mod gradcheck;
mod loss;
mod optim;

pub use augment::{
    add_noise_snr, augment, convolve_same, exponential_ir, reverberate, speed_perturb, AugmentConfig, RT60_RANGE_S,
};
pub use gradcheck::{check_gradients, TensorCheck};
pub use loss::{bce_grad, bce_loss, sigmoid};
pub use optim::AdamW;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{f1_macro, predict};
use crate::encoders::LayeredTemporalRep;
use crate::error::{Error, Result};
use crate::model::{Model, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub weight_decay: f64,
    pub early_stop: bool,
    pub warmup_epochs: usize,
    pub patience: usize,
    pub augment: AugmentConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 1,
            lr_start: 1e-4,
            lr_end: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            weight_decay: 0.01,
            early_stop: true,
            warmup_epochs: 2,
            patience: 3,
            augment: AugmentConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.batch_size != 1 {
            return Err(Error::invalid(format!(
                "batch_size {} is not supported; training is per utterance",
                self.batch_size
            )));
        }
        if !(self.lr_end > 0.0 && self.lr_end <= self.lr_start) {
            return Err(Error::invalid(format!(
                "need 0 < lr_end ({}) <= lr_start ({})",
                self.lr_end, self.lr_start
            )));
        }
        if self.patience == 0 {
            return Err(Error::invalid("patience must be at least 1"));
        }
        self.augment.validate()
    }
}

/// Linearly interpolated learning rate for a zero-based epoch.
pub fn lr_at(epoch: usize, cfg: &TrainConfig) -> Result<f64> {
    if epoch >= cfg.epochs {
        return Err(Error::invalid(format!("epoch {epoch} outside 0..{}", cfg.epochs)));
    }
    if cfg.epochs == 1 {
        return Ok(cfg.lr_start);
    }
    let frac = epoch as f64 / (cfg.epochs - 1) as f64;
    Ok(cfg.lr_start + (cfg.lr_end - cfg.lr_start) * frac)
}

/// One utterance: its representation(s) and label. `reps[0]` is the clean
/// original; any further entries are augmented copies used only for training.
#[derive(Debug, Clone)]
pub struct Example {
    pub id: String,
    pub reps: Vec<LayeredTemporalRep>,
    pub label: u8,
}

impl Example {
    pub fn new(id: impl Into<String>, rep: LayeredTemporalRep, label: u8) -> Self {
        Self {
            id: id.into(),
            reps: vec![rep],
            label,
        }
    }

    pub fn original(&self) -> &LayeredTemporalRep {
        &self.reps[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_f1: f64,
    pub stopped_early: bool,
}

impl EpochLog {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("plain record serializes")
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation F1.
    pub best: Model,
    pub best_epoch: usize,
    /// Parameters after the last completed epoch.
    pub last: Model,
    pub log: Vec<EpochLog>,
}

/// Inference logits for the clean representation of every example.
pub fn logits(model: &Model, examples: &[Example]) -> Result<Vec<f64>> {
    examples.iter().map(|e| Ok(model.infer(e.original())?.logit)).collect()
}

/// Mean loss over the clean representations.
pub fn mean_loss(model: &Model, examples: &[Example]) -> Result<f64> {
    let z = logits(model, examples)?;
    Ok(z.iter().zip(examples).map(|(&z, e)| bce_loss(z, e.label)).sum::<f64>() / z.len() as f64)
}

/// Macro F1 of thresholded logits.
pub fn f1_of(model: &Model, examples: &[Example]) -> Result<f64> {
    let preds: Vec<u8> = logits(model, examples)?.into_iter().map(predict).collect();
    let labels: Vec<u8> = examples.iter().map(|e| e.label).collect();
    f1_macro(&preds, &labels)
}

fn check_split(name: &str, examples: &[Example]) -> Result<()> {
    if examples.is_empty() {
        return Err(Error::invalid(format!("{name} split is empty")));
    }
    for e in examples {
        if e.label > 1 {
            return Err(Error::invalid(format!("example {} has label {}", e.id, e.label)));
        }
        if e.reps.is_empty() {
            return Err(Error::invalid(format!("example {} has no representation", e.id)));
        }
    }
    Ok(())
}

/// Train `model` on `train`, selecting the epoch with the best validation
/// macro F1. `on_epoch` sees each log record as soon as it is produced.
pub fn train(
    mut model: Model,
    train: &[Example],
    valid: &[Example],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    check_split("train", train)?;
    check_split("valid", valid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = AdamW::new(&model.params, cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay);
    let mut order: Vec<(usize, usize)> = train
        .iter()
        .enumerate()
        .flat_map(|(i, e)| (0..e.reps.len()).map(move |j| (i, j)))
        .collect();

    let mut best_params: ModelParams = model.params.clone();
    let mut best_f1 = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut log = Vec::new();

    for epoch in 0..cfg.epochs {
        let lr = lr_at(epoch, cfg)?;
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &(i, j) in &order {
            let ex = &train[i];
            let rep = &ex.reps[j];
            let drop = (model.config.dropout > 0.0).then(|| model.sample_dropout(&mut rng));
            let (out, trace) = model
                .forward_traced(rep, drop)
                .map_err(|e| Error::Training(format!("epoch {epoch}, sample {} (copy {j}): {e}", ex.id)))?;
            let loss = bce_loss(out.logit, ex.label);
            if !loss.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite loss at epoch {epoch}, sample {} (copy {j}), logit {}",
                    ex.id, out.logit
                )));
            }
            total += loss;
            let grads = model.backward(rep, &trace, bce_grad(out.logit, ex.label))?;
            opt.step(&mut model.params, &grads, lr);
            if !model.params.is_finite() {
                return Err(Error::Training(format!(
                    "parameters became non-finite at epoch {epoch}, sample {} (copy {j})",
                    ex.id
                )));
            }
        }
        let val_f1 = f1_of(&model, valid)?;
        if val_f1 > best_f1 {
            best_f1 = val_f1;
            best_params = model.params.clone();
            best_epoch = epoch;
            stale = 0;
        } else if epoch >= cfg.warmup_epochs {
            stale += 1;
        }
        let stop = cfg.early_stop && stale >= cfg.patience;
        let record = EpochLog {
            epoch,
            lr,
            train_loss: total / order.len() as f64,
            val_f1,
            stopped_early: stop,
        };
        on_epoch(&record);
        log.push(record);
        if stop {
            break;
        }
    }
    let config = model.config.clone();
    Ok(TrainOutcome {
        best: Model::from_parts(config, best_params)?,
        best_epoch,
        last: model,
        log,
    })
}
