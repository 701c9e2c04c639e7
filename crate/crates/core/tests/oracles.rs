//! Library outputs checked against independent brute-force or closed-form
//! computations.

mod common;

use ndarray::{array, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use common::{auc_oracle, f1_oracle, random_metric_instance};
use wavrx::analysis::{auc_roc, f1_macro, sparsity, speaker_probe, Lda, DEFAULT_SHRINKAGE};
use wavrx::model::{asp, AttentionParams};

#[test]
fn auc_and_f1_match_counting_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let (scores, labels) = random_metric_instance(&mut rng);
        let auc = auc_roc(&scores, &labels).unwrap();
        assert!((auc - auc_oracle(&scores, &labels)).abs() <= 1e-12);
        let preds: Vec<u8> = scores.iter().map(|s| u8::from(*s >= 0.0)).collect();
        let f1 = f1_macro(&preds, &labels).unwrap();
        assert!((f1 - f1_oracle(&preds, &labels)).abs() <= 1e-12);
    }
}

#[test]
fn uniform_attention_asp_is_mean_and_population_std() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = Array2::from_shape_fn((17, 4), |_| rng.sample::<f64, _>(StandardNormal) * 3.0);
    // zero scoring vector gives equal attention
    let attn = AttentionParams::zeros(6, 4);
    let out = asp(h.view(), &attn);
    for f in 0..4 {
        let col = h.column(f);
        let mean = col.sum() / 17.0;
        let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 17.0).sqrt();
        assert!((out[f] - mean).abs() < 1e-9);
        assert!((out[4 + f] - std).abs() < 1e-9);
    }
    let hand = asp(array![[1.0], [3.0]].view(), &AttentionParams::zeros(2, 1));
    assert_eq!(hand, array![2.0, 1.0]);
}

#[test]
fn sparsity_matches_brute_force_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let n = rng.gen_range(1..20);
        let d = rng.gen_range(1..64);
        let batch: Vec<Array1<f64>> = (0..n)
            .map(|_| {
                Array1::from_shape_fn(d, |_| {
                    if rng.gen_bool(0.3) {
                        rng.gen_range(-0.02..0.02)
                    } else {
                        rng.sample::<f64, _>(StandardNormal)
                    }
                })
            })
            .collect();
        let rep = sparsity(&batch, 0.01).unwrap();
        let (mut per, mut counts) = (Vec::new(), Vec::new());
        for e in &batch {
            let mut max = 0.0_f64;
            for v in e {
                if v.abs() > max {
                    max = v.abs();
                }
            }
            let mut count = 0;
            for v in e {
                if v.abs() < 0.01 * max {
                    count += 1;
                }
            }
            per.push(100.0 * count as f64 / d as f64);
            counts.push(count);
        }
        for ((pct, count), brute) in rep.per_sample_pct.iter().zip(&counts).zip(&per) {
            assert_eq!((pct * d as f64 / 100.0).round() as usize, *count);
            assert!((pct - brute).abs() < 1e-12);
        }
        let mean = per.iter().sum::<f64>() / n as f64;
        assert!((rep.mean_pct - mean).abs() < 1e-12);
    }
}

#[test]
fn two_class_lda_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 40;
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..2 * n {
        let c = i % 2;
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        rows.extend_from_slice(&[a + 1.5 * c as f64, 0.6 * a + 0.8 * b - c as f64]);
        y.push(c);
    }
    let x = nalgebra::DMatrix::from_row_slice(2 * n, 2, &rows);
    let lda = Lda::fit(&x, &y, 0.0).unwrap();

    // explicit 2x2 algebra: pooled covariance, its inverse, linear scores
    let mut mu = [[0.0; 2]; 2];
    for (i, &c) in y.iter().enumerate() {
        mu[c][0] += rows[2 * i] / n as f64;
        mu[c][1] += rows[2 * i + 1] / n as f64;
    }
    let mut s = [[0.0; 2]; 2];
    for (i, &c) in y.iter().enumerate() {
        let d = [rows[2 * i] - mu[c][0], rows[2 * i + 1] - mu[c][1]];
        for r in 0..2 {
            for k in 0..2 {
                s[r][k] += d[r] * d[k] / (2 * n) as f64;
            }
        }
    }
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let inv = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
    let score = |c: usize, p: [f64; 2]| {
        let w = [
            inv[0][0] * mu[c][0] + inv[0][1] * mu[c][1],
            inv[1][0] * mu[c][0] + inv[1][1] * mu[c][1],
        ];
        w[0] * p[0] + w[1] * p[1] - 0.5 * (w[0] * mu[c][0] + w[1] * mu[c][1]) + 0.5_f64.ln()
    };
    let scores = lda.decision_function(&x);
    for i in 0..2 * n {
        let p = [rows[2 * i], rows[2 * i + 1]];
        for c in 0..2 {
            assert!((scores[(i, c)] - score(c, p)).abs() < 1e-9);
        }
    }
}

#[test]
fn random_labels_probe_near_chance() {
    let n_speakers = 10;
    let mut accs = Vec::new();
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let emb: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..16).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let spk: Vec<String> = (0..200).map(|i| format!("s{}", i % n_speakers)).collect();
        accs.push(
            speaker_probe(&emb, &spk, 0.1, DEFAULT_SHRINKAGE, seed)
                .unwrap()
                .accuracy,
        );
    }
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    // chance is 0.1; the standard error over 20 x 180 test samples is ~0.005
    assert!((mean - 0.1).abs() < 0.03, "mean accuracy {mean}");
}

#[test]
fn speaker_clusters_are_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let centres: Vec<Vec<f64>> = (0..10)
        .map(|_| (0..16).map(|_| 5.0 * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let emb: Vec<Vec<f64>> = (0..200)
        .map(|i| {
            centres[i % 10]
                .iter()
                .map(|c| c + rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let spk: Vec<String> = (0..200).map(|i| format!("s{}", i % 10)).collect();
    let res = speaker_probe(&emb, &spk, 0.1, DEFAULT_SHRINKAGE, 0).unwrap();
    assert!(res.accuracy > 0.95, "{res:?}");
}
