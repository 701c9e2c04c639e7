//! Waveform corruptions used to enlarge the training set.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dsp::{resample_ratio, Waveform};
use crate::error::{Error, Result};

pub const RT60_RANGE_S: (f64, f64) = (0.2, 0.8);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub enabled: bool,
    pub prob_noise: f64,
    pub prob_reverb: f64,
    pub snr_min_db: f64,
    pub snr_max_db: f64,
    pub speed_min: f64,
    pub speed_max: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            prob_noise: 1.0,
            prob_reverb: 1.0,
            snr_min_db: 0.0,
            snr_max_db: 15.0,
            speed_min: 0.95,
            speed_max: 1.05,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_min_db.is_nan() || self.snr_max_db.is_nan() || self.snr_min_db > self.snr_max_db {
            return Err(Error::invalid("snr_min_db must not exceed snr_max_db"));
        }
        if !(self.speed_min > 0.0 && self.speed_min <= self.speed_max) {
            return Err(Error::invalid("need 0 < speed_min <= speed_max"));
        }
        for p in [self.prob_noise, self.prob_reverb] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

fn power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Add white Gaussian noise scaled so the signal-to-noise power ratio is
/// `snr_db`. Silent input is returned unchanged.
pub fn add_noise_snr(w: &Waveform, snr_db: f64, rng: &mut impl Rng) -> Waveform {
    let noise: Vec<f64> = (0..w.len()).map(|_| rng.sample(StandardNormal)).collect();
    let (ps, pn) = (power(&w.samples), power(&noise));
    if ps == 0.0 || pn == 0.0 {
        return w.clone();
    }
    let gain = (ps / (pn * 10f64.powf(snr_db / 10.0))).sqrt();
    Waveform {
        samples: w.samples.iter().zip(&noise).map(|(s, n)| s + gain * n).collect(),
        sample_rate: w.sample_rate,
    }
}

/// Synthetic room response: a unit direct path followed by Gaussian noise
/// under an exponential envelope that falls 60 dB after `rt60_s`.
pub fn exponential_ir(rt60_s: f64, sample_rate: u32, rng: &mut impl Rng) -> Vec<f64> {
    let n = ((rt60_s * sample_rate as f64).round() as usize).max(1);
    let decay = 3.0 * 10f64.ln() / (rt60_s * sample_rate as f64);
    let mut h: Vec<f64> = (0..n)
        .map(|i| rng.sample::<f64, _>(StandardNormal) * (-decay * i as f64).exp())
        .collect();
    h[0] = 1.0;
    let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    h.iter_mut().for_each(|v| *v /= norm);
    h
}

/// Linear convolution truncated to the length of `x`.
pub fn convolve_same(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return vec![0.0; x.len()];
    }
    let n = (x.len() + h.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let pad = |v: &[f64]| {
        let mut buf: Vec<Complex<f64>> = v.iter().map(|&r| Complex::new(r, 0.0)).collect();
        buf.resize(n, Complex::new(0.0, 0.0));
        buf
    };
    let (mut a, mut b) = (pad(x), pad(h));
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    inv.process(&mut a);
    a[..x.len()].iter().map(|c| c.re / n as f64).collect()
}

pub fn reverberate(w: &Waveform, rt60_s: f64, rng: &mut impl Rng) -> Waveform {
    let h = exponential_ir(rt60_s, w.sample_rate, rng);
    Waveform {
        samples: convolve_same(&w.samples, &h),
        sample_rate: w.sample_rate,
    }
}

/// Play back `factor` times faster by resampling; the result has
/// `round(len / factor)` samples at the original rate.
pub fn speed_perturb(w: &Waveform, factor: f64) -> Result<Waveform> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::invalid(format!("speed factor {factor} must be positive")));
    }
    let out_len = (w.len() as f64 / factor).round() as usize;
    Ok(Waveform {
        samples: resample_ratio(&w.samples, 1.0 / factor, out_len),
        sample_rate: w.sample_rate,
    })
}

/// The original followed by its corrupted copies: noisy and reverberant
/// (each with its configured probability) and one speed-perturbed copy.
/// When augmentation is disabled only the original is returned.
pub fn augment(w: &Waveform, cfg: &AugmentConfig, rng: &mut impl Rng) -> Result<Vec<Waveform>> {
    cfg.validate()?;
    let mut out = vec![w.clone()];
    if !cfg.enabled {
        return Ok(out);
    }
    if rng.gen::<f64>() < cfg.prob_noise {
        let snr = rng.gen_range(cfg.snr_min_db..=cfg.snr_max_db);
        out.push(add_noise_snr(w, snr, rng));
    }
    if rng.gen::<f64>() < cfg.prob_reverb {
        let rt60 = rng.gen_range(RT60_RANGE_S.0..=RT60_RANGE_S.1);
        out.push(reverberate(w, rt60, rng));
    }
    let factor = if rng.gen::<bool>() {
        cfg.speed_min
    } else {
        cfg.speed_max
    };
    out.push(speed_perturb(w, factor)?);
    Ok(out)
}
