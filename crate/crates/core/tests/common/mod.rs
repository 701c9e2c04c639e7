//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use ndarray::{Array1, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use wavrx::encoders::LayeredTemporalRep;
use wavrx::model::{Branches, Model, ModelConfig};
use wavrx::training::{check_gradients, TensorCheck};

/// Pair-counting AUC: P(score_pos > score_neg) + 0.5 P(tie).
pub fn auc_oracle(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                if si > sj {
                    num += 1.0;
                } else if si == sj {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

/// Macro F1 from an explicit 2×2 confusion matrix.
pub fn f1_oracle(preds: &[u8], labels: &[u8]) -> f64 {
    let mut m = [[0usize; 2]; 2];
    for (&p, &l) in preds.iter().zip(labels) {
        m[l as usize][p as usize] += 1;
    }
    let per_class = |c: usize| {
        let tp = m[c][c] as f64;
        let fp = m[1 - c][c] as f64;
        let fn_ = m[c][1 - c] as f64;
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        }
    };
    (per_class(0) + per_class(1)) / 2.0
}

/// Scores drawn from a small grid so ties are common, with both classes present.
pub fn random_metric_instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<u8>) {
    let n = rng.gen_range(2..=50);
    let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    labels[0] = 0;
    labels[1] = 1;
    let levels = rng.gen_range(2..20);
    let scores = (0..n)
        .map(|_| rng.gen_range(0..levels) as f64 / levels as f64 - 0.5)
        .collect();
    (scores, labels)
}

pub fn gradcheck_config(branches: Branches, seed: u64) -> ModelConfig {
    ModelConfig {
        n_layers: 2,
        n_features: 8,
        attn_hidden: 8,
        embed_dim: 16,
        branches,
        seed,
        ..Default::default()
    }
}

/// Model with every trainable value (biases and layer logits included)
/// moved away from its initial value, plus a random L=2, T=20, F=8 input.
pub fn random_model_and_input(branches: Branches, seed: u64) -> (Model, LayeredTemporalRep) {
    let mut model = Model::new(gradcheck_config(branches, seed)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    for (_, t) in model.params.tensors_mut() {
        for v in t {
            *v += 0.3 * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let rep = LayeredTemporalRep::new(
        Array3::from_shape_fn((2, 20, 8), |_| rng.sample::<f64, _>(StandardNormal)),
        50.0,
    )
    .unwrap();
    (model, rep)
}

pub const GRADCHECK_STEP: f64 = 1e-4;
pub const GRADCHECK_TOL: f64 = 1e-4;

/// Worst relative error over tensors, seeds and branch layouts, with and
/// without a fixed dropout mask.
pub fn gradcheck_sweep(seeds: std::ops::Range<u64>) -> (f64, Vec<(Branches, u64, bool, TensorCheck)>) {
    let mut all = Vec::new();
    let mut worst: f64 = 0.0;
    for seed in seeds {
        for branches in [Branches::Both, Branches::Temporal, Branches::Dynamics] {
            let (model, rep) = random_model_and_input(branches, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mask: Array1<f64> = model.sample_dropout(&mut rng);
            for drop in [None, Some(mask)] {
                let with_drop = drop.is_some();
                let label = (seed % 2) as u8;
                for c in check_gradients(&model, &rep, label, drop.clone(), GRADCHECK_STEP).unwrap() {
                    worst = worst.max(c.rel_err);
                    all.push((branches, seed, with_drop, c));
                }
            }
        }
    }
    (worst, all)
}
