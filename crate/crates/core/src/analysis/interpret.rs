//! Interpretability measures: Fisher F-ratio maps over feature × modulation
//! frequency, health-embedding sparsity and learned layer weights.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::dynamics::ModulationDynamics;
use crate::error::{Error, Result};
use crate::model::{softmax, ModelParams};

pub const FRATIO_EPS: f64 = 1e-12;
/// Pixels whose ratio falls below this are reported as zero.
pub const FRATIO_FLOOR: f64 = 1.0;
pub const SPARSITY_THRESHOLD: f64 = 0.01;

/// F×K discriminability map. Entries are either 0 or at least 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FRatioMap {
    pub values: Array2<f64>,
    pub mod_bin_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapPeak {
    pub feature: usize,
    pub bin: usize,
    pub freq_hz: f64,
    pub value: f64,
}

impl FRatioMap {
    /// Largest entry; the first one in row-major order wins ties.
    pub fn argmax(&self) -> MapPeak {
        let (mut best, mut value) = ((0, 0), f64::NEG_INFINITY);
        for ((f, k), &v) in self.values.indexed_iter() {
            if v > value {
                best = (f, k);
                value = v;
            }
        }
        MapPeak {
            feature: best.0,
            bin: best.1,
            freq_hz: best.1 as f64 * self.mod_bin_hz,
            value,
        }
    }

    /// Number of retained (non-zero) pixels.
    pub fn n_significant(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0.0).count()
    }

    /// Tab-separated `feature freq_hz value` rows with a header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("feature\tfreq_hz\tvalue\n");
        for ((f, k), v) in self.values.indexed_iter() {
            let _ = writeln!(out, "{f}\t{}\t{v}", k as f64 * self.mod_bin_hz);
        }
        out
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

/// Running per-pixel mean and second moment of F×K maps.
#[derive(Debug, Clone)]
pub struct MapMoments {
    count: usize,
    sum: Array2<f64>,
    sum_sq: Array2<f64>,
}

impl MapMoments {
    pub fn new(dim: (usize, usize)) -> Self {
        Self {
            count: 0,
            sum: Array2::zeros(dim),
            sum_sq: Array2::zeros(dim),
        }
    }

    pub fn push(&mut self, map: &Array2<f64>) -> Result<()> {
        if map.dim() != self.sum.dim() {
            return Err(Error::invalid(format!(
                "map of shape {:?} does not match {:?}",
                map.dim(),
                self.sum.dim()
            )));
        }
        self.count += 1;
        self.sum += map;
        self.sum_sq += &map.mapv(|v| v * v);
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Array2<f64> {
        &self.sum / self.count as f64
    }

    /// Population variance.
    pub fn variance(&self) -> Array2<f64> {
        let mean = self.mean();
        (&self.sum_sq / self.count as f64 - &mean * &mean).mapv(|v| v.max(0.0))
    }
}

/// Per-pixel `(mean_pos - mean_neg)^2 / (var_pos + var_neg + eps)` with
/// population variances; ratios below one are zeroed.
pub fn f_ratio_from_moments(pos: &MapMoments, neg: &MapMoments, mod_bin_hz: f64) -> Result<FRatioMap> {
    if pos.count == 0 || neg.count == 0 {
        return Err(Error::invalid("F-ratio needs at least one sample per group"));
    }
    if pos.sum.dim() != neg.sum.dim() {
        return Err(Error::invalid("groups have different map shapes"));
    }
    let diff = pos.mean() - neg.mean();
    let spread = pos.variance() + neg.variance();
    let mut values = Array2::zeros(diff.dim());
    for ((idx, d), s) in diff.indexed_iter().zip(spread.iter()) {
        let f = d * d / (s + FRATIO_EPS);
        values[idx] = if f < FRATIO_FLOOR { 0.0 } else { f };
    }
    Ok(FRatioMap { values, mod_bin_hz })
}

/// F-ratio between two groups of time-averaged F×K maps.
pub fn f_ratio_from_maps(pos: &[Array2<f64>], neg: &[Array2<f64>], mod_bin_hz: f64) -> Result<FRatioMap> {
    let dim = pos
        .first()
        .or(neg.first())
        .ok_or_else(|| Error::invalid("F-ratio needs non-empty groups"))?
        .dim();
    let mut mp = MapMoments::new(dim);
    let mut mn = MapMoments::new(dim);
    for m in pos {
        mp.push(m)?;
    }
    for m in neg {
        mn.push(m)?;
    }
    f_ratio_from_moments(&mp, &mn, mod_bin_hz)
}

/// F-ratio between positive and negative modulation dynamics, each
/// averaged over its STFT frames first.
pub fn f_ratio_map(pos: &[ModulationDynamics], neg: &[ModulationDynamics]) -> Result<FRatioMap> {
    let bin_hz = pos
        .first()
        .or(neg.first())
        .map(|d| d.mod_bin_hz)
        .ok_or_else(|| Error::invalid("F-ratio needs non-empty groups"))?;
    if pos.iter().chain(neg).any(|d| d.mod_bin_hz != bin_hz) {
        return Err(Error::invalid("dynamics have different modulation resolutions"));
    }
    let pm: Vec<_> = pos.iter().map(ModulationDynamics::time_average).collect();
    let nm: Vec<_> = neg.iter().map(ModulationDynamics::time_average).collect();
    f_ratio_from_maps(&pm, &nm, bin_hz)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsityReport {
    pub mean_pct: f64,
    pub std_pct: f64,
    pub threshold_rel: f64,
    pub per_sample_pct: Vec<f64>,
}

impl SparsityReport {
    pub fn to_tsv(&self) -> String {
        let mut out = format!(
            "# mean_pct\t{}\n# std_pct\t{}\n# threshold_rel\t{}\nsample\tsparsity_pct\n",
            self.mean_pct, self.std_pct, self.threshold_rel
        );
        for (i, s) in self.per_sample_pct.iter().enumerate() {
            let _ = writeln!(out, "{i}\t{s}");
        }
        out
    }
}

/// Percentage of components with magnitude below `threshold_rel` times the
/// sample's largest magnitude. An all-zero vector counts as fully sparse.
pub fn sample_sparsity(v: &[f64], threshold_rel: f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return 100.0;
    }
    let cut = threshold_rel * max;
    let below = v.iter().filter(|x| x.abs() < cut).count();
    below as f64 / v.len() as f64 * 100.0
}

/// Mean and (population) standard deviation of per-sample sparsity.
pub fn sparsity(embeddings: &[Array1<f64>], threshold_rel: f64) -> Result<SparsityReport> {
    if embeddings.is_empty() {
        return Err(Error::invalid("sparsity needs at least one embedding"));
    }
    if embeddings.iter().any(|e| e.is_empty()) {
        return Err(Error::invalid("embeddings must be non-empty"));
    }
    let per: Vec<f64> = embeddings
        .iter()
        .map(|e| sample_sparsity(e.as_slice().expect("contiguous"), threshold_rel))
        .collect();
    let n = per.len() as f64;
    let mean = per.iter().sum::<f64>() / n;
    let var = per.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    Ok(SparsityReport {
        mean_pct: mean,
        std_pct: var.sqrt(),
        threshold_rel,
        per_sample_pct: per,
    })
}

/// Normalized layer weights learned by the aggregation step.
pub fn layer_importance(params: &ModelParams) -> Vec<f64> {
    softmax(params.layer_logits.as_slice().expect("contiguous"))
}
