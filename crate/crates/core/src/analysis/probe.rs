//! Speaker-leakage probe: a shared-covariance linear discriminant classifier
//! trained on a small per-speaker fraction of the embeddings and scored on
//! the rest.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_SHRINKAGE: f64 = 1e-3;
pub const DEFAULT_TRAIN_FRAC: f64 = 0.10;

/// Fitted multi-class linear discriminant.
///
/// The pooled within-class covariance is shrunk toward a scaled identity,
/// `(1 - λ) Σ + λ (tr Σ / d) I`, which keeps the solve well posed when there
/// are fewer samples than dimensions.
#[derive(Debug, Clone)]
pub struct Lda {
    /// d×C, column c is Σ⁻¹ μ_c
    coef: DMatrix<f64>,
    intercept: DVector<f64>,
    n_classes: usize,
}

impl Lda {
    /// `x` holds one sample per row; labels are `0..n_classes`.
    pub fn fit(x: &DMatrix<f64>, labels: &[usize], shrinkage: f64) -> Result<Self> {
        let (n, d) = x.shape();
        if n != labels.len() || n == 0 {
            return Err(Error::invalid(format!("{n} samples with {} labels", labels.len())));
        }
        if !(0.0..=1.0).contains(&shrinkage) {
            return Err(Error::invalid(format!("shrinkage {shrinkage} outside [0, 1]")));
        }
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        let mut counts = vec![0usize; n_classes];
        let mut means = DMatrix::zeros(d, n_classes);
        for (i, &c) in labels.iter().enumerate() {
            counts[c] += 1;
            let mut col = means.column_mut(c);
            col += x.row(i).transpose();
        }
        if counts.contains(&0) {
            return Err(Error::invalid("every class index below the maximum needs a sample"));
        }
        for (c, &count) in counts.iter().enumerate() {
            let mut col = means.column_mut(c);
            col /= count as f64;
        }
        let mut centered = x.clone();
        for (i, &c) in labels.iter().enumerate() {
            let mut row = centered.row_mut(i);
            row -= means.column(c).transpose();
        }
        let mut cov = centered.transpose() * &centered / n as f64;
        let scale = cov.trace() / d as f64;
        let target = if scale > 0.0 { scale } else { 1.0 };
        cov *= 1.0 - shrinkage;
        for i in 0..d {
            cov[(i, i)] += shrinkage * target;
        }
        let chol = Cholesky::new(cov)
            .ok_or_else(|| Error::invalid("within-class covariance is singular; use shrinkage > 0"))?;
        let coef = chol.solve(&means);
        let intercept = DVector::from_fn(n_classes, |c, _| {
            let prior = counts[c] as f64 / n as f64;
            -0.5 * means.column(c).dot(&coef.column(c)) + prior.ln()
        });
        Ok(Self {
            coef,
            intercept,
            n_classes,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// n×C discriminant scores.
    pub fn decision_function(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut scores = x * &self.coef;
        for mut row in scores.row_iter_mut() {
            row += self.intercept.transpose();
        }
        scores
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<usize> {
        let scores = self.decision_function(x);
        scores
            .row_iter()
            .map(|row| {
                let mut best = 0;
                for c in 1..row.len() {
                    if row[c] > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub n_speakers: usize,
}

/// Per-speaker stratified split: `ceil(train_frac * n)` samples of each
/// speaker (at least one, at most `n - 1`) go to training.
pub fn stratified_split(speakers: &[String], train_frac: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::invalid(format!("train fraction {train_frac} outside (0, 1)")));
    }
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in speakers.iter().enumerate() {
        groups.entry(s.as_str()).or_default().push(i);
    }
    if groups.len() < 2 {
        return Err(Error::invalid("speaker probe needs at least two speakers"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (speaker, mut idx) in groups {
        if idx.len() < 2 {
            return Err(Error::invalid(format!(
                "speaker '{speaker}' has {} sample(s); the probe needs at least 2",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let k = ((train_frac * idx.len() as f64 - 1e-9).ceil() as usize).clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    Ok((train, test))
}

fn to_matrix(rows: &[&[f64]]) -> DMatrix<f64> {
    let d = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j])
}

/// Speaker identification accuracy of an LDA classifier fitted on a
/// per-speaker fraction of the embeddings.
pub fn speaker_probe(
    embeddings: &[Vec<f64>],
    speakers: &[String],
    train_frac: f64,
    shrinkage: f64,
    seed: u64,
) -> Result<ProbeResult> {
    if embeddings.len() != speakers.len() {
        return Err(Error::invalid(format!(
            "{} embeddings for {} speaker ids",
            embeddings.len(),
            speakers.len()
        )));
    }
    let dim = embeddings.first().map_or(0, Vec::len);
    if dim == 0 || embeddings.iter().any(|e| e.len() != dim) {
        return Err(Error::invalid("embeddings must share a non-zero dimension"));
    }
    let (train, test) = stratified_split(speakers, train_frac, seed)?;
    let ids: BTreeMap<&str, usize> = {
        let mut names: Vec<&str> = speakers.iter().map(String::as_str).collect();
        names.sort_unstable();
        names.dedup();
        names.into_iter().enumerate().map(|(i, s)| (s, i)).collect()
    };
    let label = |i: usize| ids[speakers[i].as_str()];
    let x_train = to_matrix(&train.iter().map(|&i| embeddings[i].as_slice()).collect::<Vec<_>>());
    let y_train: Vec<usize> = train.iter().map(|&i| label(i)).collect();
    let lda = Lda::fit(&x_train, &y_train, shrinkage)?;
    let x_test = to_matrix(&test.iter().map(|&i| embeddings[i].as_slice()).collect::<Vec<_>>());
    let pred = lda.predict(&x_test);
    let correct = pred.iter().zip(&test).filter(|(p, &i)| **p == label(i)).count();
    Ok(ProbeResult {
        accuracy: correct as f64 / test.len() as f64,
        n_train: train.len(),
        n_test: test.len(),
        n_speakers: ids.len(),
    })
}
