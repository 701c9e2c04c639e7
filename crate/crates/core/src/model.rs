//! The trainable diagnostic head: layer aggregation, attentive statistics
//! pooling over time and over modulation frequency, fusion into the health
//! embedding and the pruned decision layer. Forward and reverse passes are
//! written out by hand.

use ndarray::{s, Array1, Array2, Array3, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::StftConfig;
use crate::dynamics::{ModulationDynamics, ModulationTransform};
use crate::encoders::LayeredTemporalRep;
use crate::error::{Error, Result};

/// Variance floor applied before the square root in attentive pooling.
pub const ASP_EPS: f64 = 1e-8;

/// Which pooled views feed the fusion layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Branches {
    #[default]
    Both,
    Temporal,
    Dynamics,
}

impl Branches {
    pub fn uses_temporal(self) -> bool {
        matches!(self, Branches::Both | Branches::Temporal)
    }

    pub fn uses_dynamics(self) -> bool {
        matches!(self, Branches::Both | Branches::Dynamics)
    }

    pub fn width(self, n_features: usize) -> usize {
        match self {
            Branches::Both => 4 * n_features,
            _ => 2 * n_features,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub n_features: usize,
    pub attn_hidden: usize,
    pub embed_dim: usize,
    pub branches: Branches,
    pub dropout: f64,
    pub leaky_slope: f64,
    pub prune_pct: f64,
    pub stft: StftConfig,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_layers: 1,
            n_features: 40,
            attn_hidden: 128,
            embed_dim: 768,
            branches: Branches::Both,
            dropout: 0.25,
            leaky_slope: 0.1,
            prune_pct: 0.0,
            stft: StftConfig::default(),
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_layers == 0 || self.n_features == 0 || self.attn_hidden == 0 || self.embed_dim == 0 {
            return Err(Error::invalid("model dimensions must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(0.0..1.0).contains(&self.prune_pct) {
            return Err(Error::invalid(format!("prune_pct {} outside [0, 1)", self.prune_pct)));
        }
        self.stft.frame_lengths(50.0)?;
        Ok(())
    }
}

/// Single-hidden-layer attention scorer `v . tanh(W h + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    /// H×F
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub v: Array1<f64>,
}

impl AttentionParams {
    pub fn zeros(hidden: usize, features: usize) -> Self {
        Self {
            w: Array2::zeros((hidden, features)),
            b: Array1::zeros(hidden),
            v: Array1::zeros(hidden),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    /// out×in
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl LinearParams {
    pub fn zeros(n_out: usize, n_in: usize) -> Self {
        Self {
            w: Array2::zeros((n_out, n_in)),
            b: Array1::zeros(n_out),
        }
    }
}

/// Every learned tensor of the head plus the frozen prune mask. The same
/// shape doubles as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layer_logits: Array1<f64>,
    pub attn_time: AttentionParams,
    pub attn_freq: AttentionParams,
    pub fuse: LinearParams,
    pub out: LinearParams,
    pub prune_mask: Array1<f64>,
}

pub const TENSOR_NAMES: [&str; 11] = [
    "layer_logits",
    "attn_time.w",
    "attn_time.b",
    "attn_time.v",
    "attn_freq.w",
    "attn_freq.b",
    "attn_freq.v",
    "fuse.w",
    "fuse.b",
    "out.w",
    "out.b",
];

impl ModelParams {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let (h, f, e) = (cfg.attn_hidden, cfg.n_features, cfg.embed_dim);
        Self {
            layer_logits: Array1::zeros(cfg.n_layers),
            attn_time: AttentionParams::zeros(h, f),
            attn_freq: AttentionParams::zeros(h, f),
            fuse: LinearParams::zeros(e, cfg.branches.width(f)),
            out: LinearParams::zeros(1, e),
            prune_mask: Array1::ones(e),
        }
    }

    /// Uniform `±sqrt(1/fan_in)` weights, zero biases and layer logits, and
    /// a magnitude prune mask over the decision weights.
    pub fn init(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut p = Self::zeros(cfg);
        let mut fill = |a: &mut [f64], fan_in: usize| {
            let bound = (1.0 / fan_in as f64).sqrt();
            for x in a {
                *x = rng.gen_range(-bound..=bound);
            }
        };
        let (h, f) = (cfg.attn_hidden, cfg.n_features);
        for attn in [&mut p.attn_time, &mut p.attn_freq] {
            fill(attn.w.as_slice_mut().unwrap(), f);
            fill(attn.v.as_slice_mut().unwrap(), h);
        }
        let width = p.fuse.w.ncols();
        fill(p.fuse.w.as_slice_mut().unwrap(), width);
        fill(p.out.w.as_slice_mut().unwrap(), cfg.embed_dim);
        p.prune_mask = Array1::from(make_prune_mask(p.out.w.row(0), cfg.prune_pct)?);
        Ok(p)
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, t) in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    /// Trainable tensors in a fixed order (see [`TENSOR_NAMES`]).
    pub fn tensors(&self) -> [(&'static str, &[f64]); 11] {
        [
            (TENSOR_NAMES[0], self.layer_logits.as_slice().unwrap()),
            (TENSOR_NAMES[1], self.attn_time.w.as_slice().unwrap()),
            (TENSOR_NAMES[2], self.attn_time.b.as_slice().unwrap()),
            (TENSOR_NAMES[3], self.attn_time.v.as_slice().unwrap()),
            (TENSOR_NAMES[4], self.attn_freq.w.as_slice().unwrap()),
            (TENSOR_NAMES[5], self.attn_freq.b.as_slice().unwrap()),
            (TENSOR_NAMES[6], self.attn_freq.v.as_slice().unwrap()),
            (TENSOR_NAMES[7], self.fuse.w.as_slice().unwrap()),
            (TENSOR_NAMES[8], self.fuse.b.as_slice().unwrap()),
            (TENSOR_NAMES[9], self.out.w.as_slice().unwrap()),
            (TENSOR_NAMES[10], self.out.b.as_slice().unwrap()),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut [f64]); 11] {
        [
            (TENSOR_NAMES[0], self.layer_logits.as_slice_mut().unwrap()),
            (TENSOR_NAMES[1], self.attn_time.w.as_slice_mut().unwrap()),
            (TENSOR_NAMES[2], self.attn_time.b.as_slice_mut().unwrap()),
            (TENSOR_NAMES[3], self.attn_time.v.as_slice_mut().unwrap()),
            (TENSOR_NAMES[4], self.attn_freq.w.as_slice_mut().unwrap()),
            (TENSOR_NAMES[5], self.attn_freq.b.as_slice_mut().unwrap()),
            (TENSOR_NAMES[6], self.attn_freq.v.as_slice_mut().unwrap()),
            (TENSOR_NAMES[7], self.fuse.w.as_slice_mut().unwrap()),
            (TENSOR_NAMES[8], self.fuse.b.as_slice_mut().unwrap()),
            (TENSOR_NAMES[9], self.out.w.as_slice_mut().unwrap()),
            (TENSOR_NAMES[10], self.out.b.as_slice_mut().unwrap()),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }
}

/// Numerically stable softmax.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Convex combination of layers with weights `softmax(layer_logits)`.
pub fn layer_aggregate(rep: &LayeredTemporalRep, layer_logits: &[f64]) -> Result<Array2<f64>> {
    if layer_logits.len() != rep.n_layers() {
        return Err(Error::invalid(format!(
            "{} layer logits for a {}-layer representation",
            layer_logits.len(),
            rep.n_layers()
        )));
    }
    let weights = softmax(layer_logits);
    let mut out = Array2::zeros((rep.n_frames(), rep.n_features()));
    for (l, w) in weights.iter().enumerate() {
        out.scaled_add(*w, &rep.layer(l));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
struct AspTrace {
    /// tanh activations, N×H
    g: Array2<f64>,
    alpha: Array1<f64>,
    mu: Array1<f64>,
    s2: Array1<f64>,
    sigma: Array1<f64>,
}

fn asp_forward(h: ArrayView2<f64>, attn: &AttentionParams) -> (Array1<f64>, AspTrace) {
    let g = (h.dot(&attn.w.t()) + &attn.b).mapv(f64::tanh);
    let scores = g.dot(&attn.v);
    let alpha = Array1::from(softmax(scores.as_slice().unwrap()));
    let mu = alpha.dot(&h);
    let m2 = alpha.dot(&h.mapv(|x| x * x));
    let s2 = &m2 - &mu.mapv(|m| m * m);
    let sigma = s2.mapv(|v| v.max(ASP_EPS).sqrt());
    let mut out = Array1::zeros(2 * mu.len());
    out.slice_mut(s![..mu.len()]).assign(&mu);
    out.slice_mut(s![mu.len()..]).assign(&sigma);
    (
        out,
        AspTrace {
            g,
            alpha,
            mu,
            s2,
            sigma,
        },
    )
}

fn asp_backward(
    h: ArrayView2<f64>,
    attn: &AttentionParams,
    trace: &AspTrace,
    grad_out: ArrayView1<f64>,
    grads: &mut AttentionParams,
) -> Array2<f64> {
    let nf = trace.mu.len();
    let d_mu = grad_out.slice(s![..nf]);
    let d_sigma = grad_out.slice(s![nf..]);
    let d_s2 = Array1::from_shape_fn(nf, |i| {
        if trace.s2[i] > ASP_EPS {
            d_sigma[i] / (2.0 * trace.sigma[i])
        } else {
            0.0
        }
    });
    let d_mu_total = &d_mu - &(2.0 * &trace.mu * &d_s2);
    // d alpha_t = h_t . d_mu_total + (h_t ⊙ h_t) . d_s2
    let d_alpha = h.dot(&d_mu_total) + h.mapv(|x| x * x).dot(&d_s2);
    let mean = trace.alpha.dot(&d_alpha);
    let d_score = &trace.alpha * &(d_alpha - mean);

    let mut dh = Array2::zeros(h.dim());
    for (t, mut row) in dh.axis_iter_mut(Axis(0)).enumerate() {
        let a = trace.alpha[t];
        for i in 0..nf {
            row[i] = a * (d_mu_total[i] + 2.0 * h[(t, i)] * d_s2[i]);
        }
    }
    // scores = g . v, g = tanh(u)
    grads.v += &trace.g.t().dot(&d_score);
    let mut du = trace.g.mapv(|g| 1.0 - g * g);
    for (t, mut row) in du.axis_iter_mut(Axis(0)).enumerate() {
        row *= &(d_score[t] * &attn.v);
    }
    grads.w += &du.t().dot(&h);
    grads.b += &du.sum_axis(Axis(0));
    dh += &du.dot(&attn.w);
    dh
}

/// Attentive statistics pooling over the rows of `h` (N×F): the attention
/// weighted mean and standard deviation, concatenated.
pub fn asp(h: ArrayView2<f64>, attn: &AttentionParams) -> Array1<f64> {
    asp_forward(h, attn).0
}

/// Temporal pooling of a T×F matrix.
pub fn asp_time(h: ArrayView2<f64>, attn: &AttentionParams) -> Array1<f64> {
    asp(h, attn)
}

/// Average over STFT frames, then attentive pooling across modulation bins.
pub fn pool_dynamics(d: &ModulationDynamics, attn: &AttentionParams) -> Array1<f64> {
    let freq_by_feature = d.time_average().reversed_axes();
    asp(freq_by_feature.view(), attn)
}

/// Zero out the `floor(percentage * E)` smallest-magnitude decision weights.
/// Ties go to the lower index first.
pub fn make_prune_mask(weights: ArrayView1<f64>, percentage: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&percentage) {
        return Err(Error::invalid(format!("prune percentage {percentage} outside [0, 1)")));
    }
    let n = weights.len();
    let n_pruned = ((percentage * n as f64) + 1e-9).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        weights[a]
            .abs()
            .partial_cmp(&weights[b].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut mask = vec![1.0; n];
    for &i in &order[..n_pruned] {
        mask[i] = 0.0;
    }
    Ok(mask)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub logit: f64,
    /// Fusion output before dropout and activation.
    pub embedding: Array1<f64>,
}

/// Intermediates kept for the reverse pass.
#[derive(Debug, Clone)]
pub struct Trace {
    layer_weights: Vec<f64>,
    aggregated: Array2<f64>,
    time: Option<AspTrace>,
    freq: Option<(Array2<f64>, AspTrace, usize)>,
    concat: Array1<f64>,
    pre_act: Array1<f64>,
    drop_scale: Option<Array1<f64>>,
    activated: Array1<f64>,
}

/// Configuration plus parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParams,
}

impl Model {
    pub fn new(config: ModelConfig) -> Result<Self> {
        let params = ModelParams::init(&config)?;
        Ok(Self { config, params })
    }

    pub fn from_parts(config: ModelConfig, params: ModelParams) -> Result<Self> {
        config.validate()?;
        let expect = ModelParams::zeros(&config);
        for ((name, a), (_, b)) in params.tensors().iter().zip(expect.tensors().iter()) {
            if a.len() != b.len() {
                return Err(Error::invalid(format!(
                    "parameter {name} has {} values, config implies {}",
                    a.len(),
                    b.len()
                )));
            }
        }
        if params.prune_mask.len() != config.embed_dim {
            return Err(Error::invalid("prune mask length differs from embedding size"));
        }
        Ok(Self { config, params })
    }

    fn check_rep(&self, rep: &LayeredTemporalRep) -> Result<()> {
        if rep.n_layers() != self.config.n_layers || rep.n_features() != self.config.n_features {
            return Err(Error::invalid(format!(
                "representation is {}x{}x{}, model expects {} layers of {} features",
                rep.n_layers(),
                rep.n_frames(),
                rep.n_features(),
                self.config.n_layers,
                self.config.n_features
            )));
        }
        Ok(())
    }

    /// Draw an inverted-dropout scale vector for the fusion output.
    pub fn sample_dropout<R: Rng>(&self, rng: &mut R) -> Array1<f64> {
        let p = self.config.dropout;
        let keep = 1.0 / (1.0 - p);
        Array1::from_shape_fn(self.config.embed_dim, |_| if rng.gen::<f64>() < p { 0.0 } else { keep })
    }

    pub fn forward(&self, rep: &LayeredTemporalRep, mode: Mode, rng: &mut impl Rng) -> Result<ForwardOutput> {
        let drop = match mode {
            Mode::Train if self.config.dropout > 0.0 => Some(self.sample_dropout(rng)),
            _ => None,
        };
        Ok(self.forward_traced(rep, drop)?.0)
    }

    /// Inference-mode forward pass (no dropout).
    pub fn infer(&self, rep: &LayeredTemporalRep) -> Result<ForwardOutput> {
        Ok(self.forward_traced(rep, None)?.0)
    }

    /// Forward pass with an explicit dropout scale vector (`None` disables
    /// dropout), returning the trace needed by [`Model::backward`].
    pub fn forward_traced(
        &self,
        rep: &LayeredTemporalRep,
        drop_scale: Option<Array1<f64>>,
    ) -> Result<(ForwardOutput, Trace)> {
        self.check_rep(rep)?;
        let p = &self.params;
        let cfg = &self.config;
        let layer_weights = softmax(p.layer_logits.as_slice().unwrap());
        let aggregated = layer_aggregate(rep, p.layer_logits.as_slice().unwrap())?;
        let nf = cfg.n_features;
        let mut concat = Array1::zeros(cfg.branches.width(nf));
        let mut offset = 0;

        let time = if cfg.branches.uses_temporal() {
            let (pooled, trace) = asp_forward(aggregated.view(), &p.attn_time);
            concat.slice_mut(s![offset..offset + 2 * nf]).assign(&pooled);
            offset += 2 * nf;
            Some(trace)
        } else {
            None
        };
        let freq = if cfg.branches.uses_dynamics() {
            let transform = ModulationTransform::new(&cfg.stft, rep.frame_rate_hz())?;
            let dyn_ = transform.forward(aggregated.view())?;
            let n_frames = dyn_.n_frames();
            let freq_by_feature = dyn_.time_average().reversed_axes().as_standard_layout().to_owned();
            let (pooled, trace) = asp_forward(freq_by_feature.view(), &p.attn_freq);
            concat.slice_mut(s![offset..offset + 2 * nf]).assign(&pooled);
            Some((freq_by_feature, trace, n_frames))
        } else {
            None
        };

        let pre_act = p.fuse.w.dot(&concat) + &p.fuse.b;
        let dropped = match &drop_scale {
            Some(scale) => {
                if scale.len() != pre_act.len() {
                    return Err(Error::invalid("dropout scale length differs from embedding size"));
                }
                &pre_act * scale
            }
            None => pre_act.clone(),
        };
        let slope = cfg.leaky_slope;
        let activated = dropped.mapv(|z| if z > 0.0 { z } else { slope * z });
        let masked = &p.out.w.row(0) * &p.prune_mask;
        let logit = masked.dot(&activated) + p.out.b[0];
        if !logit.is_finite() {
            return Err(Error::Training(format!("non-finite logit {logit}")));
        }
        let out = ForwardOutput {
            logit,
            embedding: pre_act.clone(),
        };
        Ok((
            out,
            Trace {
                layer_weights,
                aggregated,
                time,
                freq,
                concat,
                pre_act,
                drop_scale,
                activated,
            },
        ))
    }

    /// Gradient of a scalar loss with respect to every trainable tensor,
    /// given `d loss / d logit`. Pruned decision weights get exactly zero.
    pub fn backward(&self, rep: &LayeredTemporalRep, trace: &Trace, d_logit: f64) -> Result<ModelParams> {
        let p = &self.params;
        let cfg = &self.config;
        let nf = cfg.n_features;
        let mut g = p.zeros_like();

        g.out.b[0] = d_logit;
        let masked = &p.out.w.row(0) * &p.prune_mask;
        g.out.w.row_mut(0).assign(&(d_logit * &trace.activated * &p.prune_mask));
        let d_act = d_logit * masked;
        let slope = cfg.leaky_slope;
        let dropped = match &trace.drop_scale {
            Some(scale) => &trace.pre_act * scale,
            None => trace.pre_act.clone(),
        };
        let mut d_pre = Array1::from_shape_fn(d_act.len(), |i| d_act[i] * if dropped[i] > 0.0 { 1.0 } else { slope });
        if let Some(scale) = &trace.drop_scale {
            d_pre *= scale;
        }
        for (i, mut row) in g.fuse.w.axis_iter_mut(Axis(0)).enumerate() {
            row.assign(&(d_pre[i] * &trace.concat));
        }
        g.fuse.b.assign(&d_pre);
        let d_concat = p.fuse.w.t().dot(&d_pre);

        let mut d_agg: Array2<f64> = Array2::zeros(trace.aggregated.dim());
        let mut offset = 0;
        if let Some(time) = &trace.time {
            let d_pooled = d_concat.slice(s![offset..offset + 2 * nf]);
            offset += 2 * nf;
            d_agg += &asp_backward(trace.aggregated.view(), &p.attn_time, time, d_pooled, &mut g.attn_time);
        }
        if let Some((freq_by_feature, ftrace, n_frames)) = &trace.freq {
            let d_pooled = d_concat.slice(s![offset..offset + 2 * nf]);
            let d_map = asp_backward(freq_by_feature.view(), &p.attn_freq, ftrace, d_pooled, &mut g.attn_freq);
            let (k, _) = d_map.dim();
            let inv_j = 1.0 / *n_frames as f64;
            let d_dyn = Array3::from_shape_fn((nf, *n_frames, k), |(f, _, b)| d_map[(b, f)] * inv_j);
            let transform = ModulationTransform::new(&cfg.stft, rep.frame_rate_hz())?;
            d_agg += &transform.backward(trace.aggregated.view(), d_dyn.view())?;
        }

        // layer aggregation: out = sum_l a_l R_l, a = softmax(logits)
        let d_weights: Vec<f64> = (0..rep.n_layers()).map(|l| (&rep.layer(l) * &d_agg).sum()).collect();
        let mean: f64 = trace.layer_weights.iter().zip(&d_weights).map(|(a, d)| a * d).sum();
        for (l, slot) in g.layer_logits.iter_mut().enumerate() {
            *slot = trace.layer_weights[l] * (d_weights[l] - mean);
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array3};

    #[test]
    fn singleton_and_uniform_aggregation() {
        let a = Array3::from_shape_fn((1, 3, 2), |(_, t, f)| (t * 2 + f) as f64);
        let rep = LayeredTemporalRep::new(a.clone(), 50.0).unwrap();
        assert_eq!(layer_aggregate(&rep, &[3.7]).unwrap(), a.slice(s![0, .., ..]));

        let two = Array3::from_shape_fn((2, 3, 2), |(l, t, f)| if l == 0 { t as f64 } else { f as f64 * 4.0 });
        let rep = LayeredTemporalRep::new(two.clone(), 50.0).unwrap();
        let agg = layer_aggregate(&rep, &[0.0, 0.0]).unwrap();
        let expect = 0.5 * &two.slice(s![0, .., ..]) + 0.5 * &two.slice(s![1, .., ..]);
        assert_eq!(agg, expect);
        assert!(layer_aggregate(&rep, &[0.0]).is_err());

        let same = Array3::from_shape_fn((2, 3, 2), |(_, t, f)| (t + f) as f64 * 0.25);
        let rep = LayeredTemporalRep::new(same.clone(), 50.0).unwrap();
        let agg = layer_aggregate(&rep, &[1.3, -0.4]).unwrap();
        for (a, b) in agg.iter().zip(same.slice(s![0, .., ..]).iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn asp_hand_example() {
        let attn = AttentionParams::zeros(4, 1);
        let out = asp_time(array![[1.0], [3.0]].view(), &attn);
        assert_eq!(out, array![2.0, 1.0]);
    }

    #[test]
    fn asp_single_frame() {
        let attn = AttentionParams::zeros(3, 2);
        let out = asp_time(array![[0.5, -2.0]].view(), &attn);
        assert_eq!(out.slice(s![..2]), array![0.5, -2.0]);
        assert!((out[2] - ASP_EPS.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pool_dynamics_single_bin_and_identical_frames() {
        let d = ModulationDynamics {
            values: Array3::from_shape_fn((2, 3, 1), |(f, _, _)| f as f64 + 1.0),
            mod_bin_hz: 0.125,
        };
        let out = pool_dynamics(&d, &AttentionParams::zeros(2, 2));
        assert_eq!(out.slice(s![..2]), array![1.0, 2.0]);
        assert!(out.slice(s![2..]).iter().all(|&s| (s - ASP_EPS.sqrt()).abs() < 1e-15));
    }

    #[test]
    fn prune_masks() {
        assert_eq!(
            make_prune_mask(array![3.0, -5.0, 1.0, 2.0].view(), 0.5).unwrap(),
            vec![1.0, 1.0, 0.0, 0.0]
        );
        let w = Array1::from_shape_fn(10, |i| (i as f64 - 4.2).sin());
        assert!(make_prune_mask(w.view(), 0.0).unwrap().iter().all(|&m| m == 1.0));
        let mask = make_prune_mask(w.view(), 0.9).unwrap();
        assert_eq!(mask.iter().filter(|&&m| m == 1.0).count(), 1);
        let best = (0..10)
            .max_by(|&a, &b| w[a].abs().partial_cmp(&w[b].abs()).unwrap())
            .unwrap();
        assert_eq!(mask[best], 1.0);
        // ties: lower index pruned first
        assert_eq!(
            make_prune_mask(array![1.0, 1.0, 1.0].view(), 0.67).unwrap(),
            vec![0.0, 0.0, 1.0]
        );
        assert!(make_prune_mask(w.view(), 1.0).is_err());
    }

    fn tiny_model(branches: Branches) -> (Model, LayeredTemporalRep) {
        let cfg = ModelConfig {
            n_layers: 2,
            n_features: 3,
            attn_hidden: 4,
            embed_dim: 5,
            branches,
            seed: 9,
            ..Default::default()
        };
        let rep = LayeredTemporalRep::new(
            Array3::from_shape_fn((2, 20, 3), |(l, t, f)| {
                ((l * 31 + t * 7 + f * 3) % 13) as f64 / 6.0 - 1.0
            }),
            50.0,
        )
        .unwrap();
        (Model::new(cfg).unwrap(), rep)
    }

    #[test]
    fn infer_is_deterministic_and_mask_zero_gives_bias() {
        let (mut model, rep) = tiny_model(Branches::Both);
        let a = model.infer(&rep).unwrap();
        assert_eq!(a, model.infer(&rep).unwrap());
        assert_eq!(a.embedding.len(), 5);
        model.params.prune_mask.fill(0.0);
        model.params.out.b[0] = 0.37;
        assert_eq!(model.infer(&rep).unwrap().logit, 0.37);
    }

    #[test]
    fn branch_widths() {
        for (b, width) in [(Branches::Both, 12), (Branches::Temporal, 6), (Branches::Dynamics, 6)] {
            let (model, rep) = tiny_model(b);
            assert_eq!(model.params.fuse.w.ncols(), width);
            model.infer(&rep).unwrap();
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (model, _) = tiny_model(Branches::Both);
        let rep = LayeredTemporalRep::new(Array3::zeros((1, 20, 3)), 50.0).unwrap();
        assert!(matches!(model.infer(&rep), Err(Error::InvalidArgument(_))));
    }
}
