//! Signal-processing primitives: Hamming window, framed power STFT,
//! band-limited resampling and a triangular mel filterbank.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mono audio with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    #[default]
    Hamming,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PadMode {
    /// Series shorter than one window are zero-padded to one window.
    #[default]
    Zero,
    /// Short series are rejected.
    None,
}

/// Framing parameters for a short-time Fourier transform. Window and hop
/// are given in milliseconds and converted to whole samples of the series
/// being analysed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    pub window_ms: f64,
    pub hop_ms: f64,
    pub n_fft: usize,
    pub window_kind: WindowKind,
    pub pad: PadMode,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            window_ms: 256.0,
            hop_ms: 64.0,
            n_fft: 400,
            window_kind: WindowKind::Hamming,
            pad: PadMode::Zero,
        }
    }
}

impl StftConfig {
    pub fn new(window_ms: f64, hop_ms: f64, n_fft: usize) -> Self {
        Self {
            window_ms,
            hop_ms,
            n_fft,
            ..Self::default()
        }
    }

    /// Window sweep helper: the given window with a 25% hop.
    pub fn with_quarter_hop(window_ms: f64) -> Self {
        Self::new(window_ms, window_ms / 4.0, 400)
    }

    /// Number of one-sided frequency bins.
    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    /// Window and hop lengths in samples for a series sampled at `rate_hz`,
    /// rounded to the nearest integer and clamped to at least one.
    pub fn frame_lengths(&self, rate_hz: f64) -> Result<(usize, usize)> {
        if !(self.hop_ms > 0.0 && self.window_ms >= self.hop_ms) {
            return Err(Error::invalid(format!(
                "stft window {} ms / hop {} ms: need window >= hop > 0",
                self.window_ms, self.hop_ms
            )));
        }
        if !(rate_hz > 0.0 && rate_hz.is_finite()) {
            return Err(Error::invalid(format!("series rate {rate_hz} Hz must be positive")));
        }
        let window = ((self.window_ms * rate_hz / 1000.0).round() as usize).max(1);
        let hop = ((self.hop_ms * rate_hz / 1000.0).round() as usize).max(1);
        if self.n_fft < window {
            return Err(Error::invalid(format!(
                "n_fft {} shorter than window of {window} samples",
                self.n_fft
            )));
        }
        Ok((window, hop))
    }
}

/// J×K matrix of one-sided power values.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrogram {
    pub values: Array2<f64>,
    pub bin_hz: f64,
    pub frame_rate_hz: f64,
}

impl PowerSpectrogram {
    pub fn n_frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_bins(&self) -> usize {
        self.values.ncols()
    }
}

/// Symmetric Hamming window.
pub fn hamming_window(length: usize) -> Result<Vec<f64>> {
    match length {
        0 => Err(Error::invalid("window length must be at least 1")),
        1 => Ok(vec![1.0]),
        n => {
            let denom = (n - 1) as f64;
            Ok((0..n)
                .map(|k| 0.54 - 0.46 * (2.0 * PI * k as f64 / denom).cos())
                .collect())
        }
    }
}

/// Number of full frames that fit in `len` samples.
pub fn frame_count(len: usize, window: usize, hop: usize) -> usize {
    if len < window {
        0
    } else {
        (len - window) / hop + 1
    }
}

/// Reusable power-STFT plan: the window, hop and FFT are fixed so the plan
/// can be applied to many series of the same rate.
#[derive(Clone)]
pub struct StftPlan {
    window: Vec<f64>,
    hop: usize,
    n_fft: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for StftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StftPlan")
            .field("window_len", &self.window.len())
            .field("hop", &self.hop)
            .field("n_fft", &self.n_fft)
            .finish()
    }
}

impl StftPlan {
    pub fn new(cfg: &StftConfig, rate_hz: f64) -> Result<Self> {
        let (window_len, hop) = cfg.frame_lengths(rate_hz)?;
        let window = match cfg.window_kind {
            WindowKind::Hamming => hamming_window(window_len)?,
        };
        let fft = FftPlanner::new().plan_fft_forward(cfg.n_fft);
        Ok(Self {
            window,
            hop,
            n_fft: cfg.n_fft,
            fft,
        })
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn n_frames(&self, len: usize) -> usize {
        frame_count(len, self.window.len(), self.hop)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len < self.window.len() {
            return Err(Error::invalid(format!(
                "series of {len} samples is shorter than the {}-sample window; zero-pad first",
                self.window.len()
            )));
        }
        Ok(())
    }

    /// Windowed, zero-padded transform of the frame starting at `start`.
    fn frame_spectrum(&self, series: &[f64], start: usize, buf: &mut [Complex<f64>]) {
        for (k, slot) in buf.iter_mut().enumerate() {
            *slot = if k < self.window.len() {
                Complex::new(series[start + k] * self.window[k], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        self.fft.process(buf);
    }

    /// J×K power matrix of `series`.
    pub fn power(&self, series: &[f64]) -> Result<Array2<f64>> {
        self.check_len(series.len())?;
        let n_frames = self.n_frames(series.len());
        let n_bins = self.n_bins();
        let mut out = Array2::zeros((n_frames, n_bins));
        let mut buf = vec![Complex::new(0.0, 0.0); self.n_fft];
        for j in 0..n_frames {
            self.frame_spectrum(series, j * self.hop, &mut buf);
            for (dst, c) in out.row_mut(j).iter_mut().zip(&buf[..n_bins]) {
                *dst = c.norm_sqr();
            }
        }
        Ok(out)
    }

    /// Vector-Jacobian product of [`StftPlan::power`]: given the gradient of
    /// a scalar with respect to every power value, returns the gradient with
    /// respect to each input sample.
    ///
    /// For `P_k = |X_k|^2` with `X_k = sum_n y_n e^{-2 pi i k n / N}` the
    /// derivative is `dP_k/dy_n = 2 Re(conj(X_k) e^{-2 pi i k n / N})`, so the
    /// sum over bins is one more forward FFT of `g_k conj(X_k)`.
    pub fn power_backward(&self, series: &[f64], grad_power: ArrayView2<f64>) -> Result<Vec<f64>> {
        self.check_len(series.len())?;
        let n_frames = self.n_frames(series.len());
        let n_bins = self.n_bins();
        if grad_power.dim() != (n_frames, n_bins) {
            return Err(Error::invalid(format!(
                "power gradient has shape {:?}, expected ({n_frames}, {n_bins})",
                grad_power.dim()
            )));
        }
        let mut grad = vec![0.0; series.len()];
        let mut buf = vec![Complex::new(0.0, 0.0); self.n_fft];
        for j in 0..n_frames {
            let start = j * self.hop;
            self.frame_spectrum(series, start, &mut buf);
            for (k, slot) in buf.iter_mut().enumerate() {
                *slot = if k < n_bins {
                    slot.conj() * grad_power[(j, k)]
                } else {
                    Complex::new(0.0, 0.0)
                };
            }
            self.fft.process(&mut buf);
            for (n, w) in self.window.iter().enumerate() {
                grad[start + n] += 2.0 * buf[n].re * w;
            }
        }
        Ok(grad)
    }
}

/// Framed power STFT of a real series sampled at `rate_hz`.
pub fn stft_power(series: &[f64], rate_hz: f64, cfg: &StftConfig) -> Result<PowerSpectrogram> {
    let plan = StftPlan::new(cfg, rate_hz)?;
    let values = plan.power(series)?;
    Ok(PowerSpectrogram {
        values,
        bin_hz: rate_hz / cfg.n_fft as f64,
        frame_rate_hz: rate_hz,
    })
}

const SINC_ZERO_CROSSINGS: f64 = 16.0;
const SINC_ROLLOFF: f64 = 0.95;

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Windowed-sinc interpolation of `x` onto `out_len` points spaced
/// `1 / ratio` input samples apart. A ratio of exactly one copies the input.
pub(crate) fn resample_ratio(x: &[f64], ratio: f64, out_len: usize) -> Vec<f64> {
    if ratio == 1.0 && out_len == x.len() {
        return x.to_vec();
    }
    let cutoff = ratio.min(1.0) * SINC_ROLLOFF;
    let half = SINC_ZERO_CROSSINGS / cutoff;
    let n = x.len() as isize;
    (0..out_len)
        .map(|i| {
            let t = i as f64 / ratio;
            let lo = ((t - half).ceil() as isize).max(0);
            let hi = ((t + half).floor() as isize).min(n - 1);
            let mut acc = 0.0;
            for m in lo..=hi {
                let d = t - m as f64;
                let taper = 0.5 * (1.0 + (PI * d / half).cos());
                acc += x[m as usize] * cutoff * sinc(cutoff * d) * taper;
            }
            acc
        })
        .collect()
}

/// Band-limited resampling to `target_rate`.
pub fn resample(w: &Waveform, target_rate: u32) -> Result<Waveform> {
    if target_rate == 0 || w.sample_rate == 0 {
        return Err(Error::invalid("sample rates must be positive"));
    }
    if target_rate == w.sample_rate {
        return Ok(w.clone());
    }
    let ratio = target_rate as f64 / w.sample_rate as f64;
    let out_len = (w.len() as f64 * ratio).round() as usize;
    Ok(Waveform {
        samples: resample_ratio(&w.samples, ratio, out_len),
        sample_rate: target_rate,
    })
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters equally spaced on the mel scale from 0 Hz to Nyquist,
/// one row per filter over the `n_fft / 2 + 1` one-sided bins. Peaks are 1.
pub fn mel_filterbank(n_mels: usize, n_fft: usize, sample_rate: u32) -> Result<Array2<f64>> {
    if n_mels == 0 {
        return Err(Error::invalid("n_mels must be at least 1"));
    }
    if n_fft < 2 {
        return Err(Error::invalid("n_fft must be at least 2"));
    }
    if sample_rate == 0 {
        return Err(Error::invalid("sample rate must be positive"));
    }
    let n_bins = n_fft / 2 + 1;
    if n_mels > n_bins {
        return Err(Error::invalid(format!(
            "{n_mels} mel filters exceed the {n_bins} available bins"
        )));
    }
    let nyquist = sample_rate as f64 / 2.0;
    let mel_max = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bin_hz = sample_rate as f64 / n_fft as f64;
    let mut fb = Array2::zeros((n_mels, n_bins));
    for m in 0..n_mels {
        let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for k in 0..n_bins {
            let f = k as f64 * bin_hz;
            let rise = (f - lo) / (center - lo);
            let fall = (hi - f) / (hi - center);
            fb[(m, k)] = rise.min(fall).max(0.0);
        }
        if fb.row(m).iter().all(|&v| v == 0.0) {
            return Err(Error::invalid(format!(
                "mel filter {m} covers no FFT bin: {n_mels} filters is too many for n_fft {n_fft}"
            )));
        }
    }
    Ok(fb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dft_power(frame: &[f64], n_fft: usize) -> Vec<f64> {
        (0..n_fft)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (n, x) in frame.iter().enumerate() {
                    let ang = -2.0 * PI * (k * n) as f64 / n_fft as f64;
                    re += x * ang.cos();
                    im += x * ang.sin();
                }
                re * re + im * im
            })
            .collect()
    }

    fn argmax(v: &[f64]) -> usize {
        v.iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) },
            )
            .0
    }

    #[test]
    fn hamming_small_cases() {
        assert_eq!(hamming_window(1).unwrap(), vec![1.0]);
        let w3 = hamming_window(3).unwrap();
        assert!((w3[0] - 0.08).abs() < 1e-15 && (w3[1] - 1.0).abs() < 1e-15 && (w3[2] - 0.08).abs() < 1e-15);
        let w5 = hamming_window(5).unwrap();
        for (k, w) in w5.iter().enumerate() {
            let expect = 0.54 - 0.46 * (2.0 * PI * k as f64 / 4.0).cos();
            assert!((w - expect).abs() < 1e-12);
        }
        assert!(matches!(hamming_window(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn frame_lengths_round_table_defaults() {
        let cfg = StftConfig::default();
        assert_eq!(cfg.frame_lengths(50.0).unwrap(), (13, 3));
        assert!(StftConfig::new(10.0, 20.0, 400).frame_lengths(50.0).is_err());
        assert!(StftConfig::new(1000.0, 250.0, 40).frame_lengths(50.0).is_err());
    }

    #[test]
    fn zero_series_has_zero_power() {
        let spec = stft_power(&[0.0; 200], 50.0, &StftConfig::default()).unwrap();
        assert!(spec.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn frame_count_arithmetic() {
        // 260 ms at 50 Hz = 13 frames; 60 ms = 3 frames.
        let cfg = StftConfig::new(260.0, 60.0, 400);
        let spec = stft_power(&vec![0.1; 500], 50.0, &cfg).unwrap();
        assert_eq!(spec.n_frames(), 163);
        assert_eq!(spec.n_bins(), 201);
        assert!((spec.bin_hz - 0.125).abs() < 1e-15);
    }

    #[test]
    fn short_series_is_rejected() {
        let err = stft_power(&[1.0; 5], 50.0, &StftConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn on_bin_sinusoid_argmax_matches_dft_oracle() {
        let rate = 50.0;
        let cfg = StftConfig::new(8000.0, 2000.0, 400);
        for bin in [4usize, 17, 60] {
            let f = bin as f64 * rate / 400.0;
            let x: Vec<f64> = (0..1200).map(|n| (2.0 * PI * f * n as f64 / rate).sin()).collect();
            let spec = stft_power(&x, rate, &cfg).unwrap();
            let win = hamming_window(400).unwrap();
            for j in 0..spec.n_frames() {
                let frame: Vec<f64> = (0..400).map(|n| x[j * 100 + n] * win[n]).collect();
                let oracle = dft_power(&frame, 400);
                let got = spec.values.row(j).to_vec();
                assert_eq!(argmax(&got), bin);
                assert_eq!(argmax(&oracle[..201]), bin);
                for k in 0..201 {
                    assert!((got[k] - oracle[k]).abs() <= 1e-8 * oracle[k].max(1.0));
                }
            }
        }
    }

    #[test]
    fn power_backward_matches_finite_differences() {
        let cfg = StftConfig::new(140.0, 60.0, 16);
        let plan = StftPlan::new(&cfg, 50.0).unwrap();
        let x: Vec<f64> = (0..25).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let p = plan.power(&x).unwrap();
        let g = Array2::from_shape_fn(p.dim(), |(j, k)| 0.3 + 0.1 * j as f64 - 0.05 * k as f64);
        let analytic = plan.power_backward(&x, g.view()).unwrap();
        let h = 1e-5;
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let fp = (&plan.power(&xp).unwrap() * &g).sum();
            let fm = (&plan.power(&xm).unwrap() * &g).sum();
            let fd = (fp - fm) / (2.0 * h);
            assert!(
                (fd - analytic[i]).abs() < 1e-6 * fd.abs().max(1.0),
                "i={i} fd={fd} an={}",
                analytic[i]
            );
        }
    }

    #[test]
    fn resample_identity_and_length() {
        let w = Waveform::new((0..100).map(|i| (i as f64).sin()).collect(), 16000).unwrap();
        assert_eq!(resample(&w, 16000).unwrap(), w);
        let w32 = Waveform::new(vec![0.25; 64000], 32000).unwrap();
        assert_eq!(resample(&w32, 16000).unwrap().len(), 32000);
        assert!(resample(&w, 0).is_err());
    }

    #[test]
    fn resample_keeps_tone_frequency() {
        let src = 48000.0;
        let x: Vec<f64> = (0..48000).map(|n| (2.0 * PI * 440.0 * n as f64 / src).sin()).collect();
        let y = resample(&Waveform::new(x, 48000).unwrap(), 16000).unwrap();
        assert_eq!(y.len(), 16000);
        let n_fft = 16000;
        // direct DFT over the band of interest only
        let bins: Vec<f64> = (0..1000)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (n, s) in y.samples.iter().enumerate() {
                    let ang = -2.0 * PI * (k * n) as f64 / n_fft as f64;
                    re += s * ang.cos();
                    im += s * ang.sin();
                }
                re * re + im * im
            })
            .collect();
        let peak = argmax(&bins) as f64; // 1 Hz per bin
        assert!((peak - 440.0).abs() <= 1.0, "peak at {peak} Hz");
    }

    #[test]
    fn mel_filterbank_shape_and_order() {
        let fb = mel_filterbank(64, 400, 16000).unwrap();
        assert_eq!(fb.dim(), (64, 201));
        let mut last_peak = None;
        for row in fb.rows() {
            assert!(row.iter().all(|&v| v >= 0.0));
            assert!(row.iter().any(|&v| v > 0.0));
            let peak = argmax(&row.to_vec());
            if let Some(prev) = last_peak {
                assert!(peak >= prev);
            }
            last_peak = Some(peak);
        }
        assert!(mel_filterbank(202, 400, 16000).is_err());
        assert!(mel_filterbank(150, 400, 16000).is_err());
    }

    #[test]
    fn mel_center_frequencies_increase() {
        let n_mels = 40;
        let mel_max = hz_to_mel(8000.0);
        let centers: Vec<f64> = (1..=n_mels)
            .map(|i| mel_to_hz(mel_max * i as f64 / (n_mels + 1) as f64))
            .collect();
        assert!(centers.windows(2).all(|w| w[1] > w[0]));
        assert!((mel_to_hz(hz_to_mel(1234.5)) - 1234.5).abs() < 1e-9);
    }
}
