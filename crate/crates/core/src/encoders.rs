//! Waveform preprocessing and producers of layered temporal representations:
//! the built-in log-mel encoder and the WRX1 tensor file format.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{s, Array2, Array3, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dsp::{mel_filterbank, resample, StftConfig, StftPlan, Waveform};
use crate::error::{Error, Result};

/// L×T×F tensor of encoder hidden states (layer, frame, feature).
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredTemporalRep {
    values: Array3<f64>,
    frame_rate_hz: f64,
}

impl LayeredTemporalRep {
    pub fn new(values: Array3<f64>, frame_rate_hz: f64) -> Result<Self> {
        let (l, t, f) = values.dim();
        if l == 0 || t == 0 || f == 0 {
            return Err(Error::invalid(format!("empty representation {l}x{t}x{f}")));
        }
        if !(frame_rate_hz > 0.0 && frame_rate_hz.is_finite()) {
            return Err(Error::invalid(format!("frame rate {frame_rate_hz} must be positive")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("representation contains non-finite values"));
        }
        Ok(Self { values, frame_rate_hz })
    }

    /// Single-layer representation from a T×F matrix.
    pub fn from_matrix(matrix: Array2<f64>, frame_rate_hz: f64) -> Result<Self> {
        let (t, f) = matrix.dim();
        let values = matrix.into_shape_with_order((1, t, f)).expect("contiguous reshape");
        Self::new(values, frame_rate_hz)
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    pub fn layer(&self, l: usize) -> ArrayView2<'_, f64> {
        self.values.slice(s![l, .., ..])
    }

    pub fn frame_rate_hz(&self) -> f64 {
        self.frame_rate_hz
    }

    pub fn n_layers(&self) -> usize {
        self.values.dim().0
    }

    pub fn n_frames(&self) -> usize {
        self.values.dim().1
    }

    pub fn n_features(&self) -> usize {
        self.values.dim().2
    }

    pub fn into_values(self) -> Array3<f64> {
        self.values
    }

    /// Copy with every layer's features shifted to zero mean over time.
    pub fn centred(&self) -> Self {
        let mut values = self.values.clone();
        for mut block in values.outer_iter_mut() {
            let mean = block.mean_axis(ndarray::Axis(0)).expect("at least one frame");
            for mut frame in block.rows_mut() {
                frame -= &mean;
            }
        }
        Self {
            values,
            frame_rate_hz: self.frame_rate_hz,
        }
    }
}

/// Possibly multi-channel audio as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Audio {
    pub channels: Vec<Vec<f64>>,
    pub sample_rate: u32,
}

impl From<Waveform> for Audio {
    fn from(w: Waveform) -> Self {
        Audio {
            channels: vec![w.samples],
            sample_rate: w.sample_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub max_duration_s: f64,
    pub min_duration_s: f64,
    pub target_rate: u32,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            max_duration_s: 10.0,
            min_duration_s: 1.0,
            target_rate: 16000,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_duration_s > 0.0 && self.min_duration_s <= self.max_duration_s) {
            return Err(Error::invalid(format!(
                "need 0 < min_duration_s ({}) <= max_duration_s ({})",
                self.min_duration_s, self.max_duration_s
            )));
        }
        if self.target_rate == 0 {
            return Err(Error::invalid("target rate must be positive"));
        }
        Ok(())
    }
}

/// Mono downmix, resampling, head truncation, end padding and peak
/// normalization. Silent input is left unnormalized.
pub fn preprocess(audio: &Audio, cfg: &PreprocessConfig) -> Result<Waveform> {
    cfg.validate()?;
    let n = audio.channels.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(Error::invalid("audio has no samples"));
    }
    if audio.channels.iter().any(|c| c.len() != n) {
        return Err(Error::invalid("channels differ in length"));
    }
    let mono = if audio.channels.len() == 1 {
        audio.channels[0].clone()
    } else {
        let nc = audio.channels.len() as f64;
        (0..n)
            .map(|i| audio.channels.iter().map(|c| c[i]).sum::<f64>() / nc)
            .collect()
    };
    let mut w = resample(&Waveform::new(mono, audio.sample_rate)?, cfg.target_rate)?;
    let rate = cfg.target_rate as f64;
    let max_len = (cfg.max_duration_s * rate).round() as usize;
    let min_len = (cfg.min_duration_s * rate).round() as usize;
    w.samples.truncate(max_len);
    if w.samples.len() < min_len {
        w.samples.resize(min_len, 0.0);
    }
    let peak = w.peak();
    if peak > 0.0 {
        for s in &mut w.samples {
            *s /= peak;
        }
    }
    Ok(w)
}

pub const MEL_EPS: f64 = 1e-10;
pub const MEL_SAMPLE_RATE: u32 = 16000;

/// Log-mel encoder with a 25 ms window and 20 ms hop, producing a single
/// layer at 50 frames per second.
#[derive(Debug, Clone)]
pub struct MelEncoder {
    plan: StftPlan,
    filters: Array2<f64>,
}

impl MelEncoder {
    pub fn new(n_mels: usize) -> Result<Self> {
        let cfg = StftConfig::new(25.0, 20.0, 400);
        let plan = StftPlan::new(&cfg, MEL_SAMPLE_RATE as f64)?;
        let filters = mel_filterbank(n_mels, cfg.n_fft, MEL_SAMPLE_RATE)?;
        Ok(Self { plan, filters })
    }

    pub fn n_mels(&self) -> usize {
        self.filters.nrows()
    }

    pub fn frame_rate_hz(&self) -> f64 {
        MEL_SAMPLE_RATE as f64 / self.plan.hop() as f64
    }

    pub fn encode(&self, w: &Waveform) -> Result<LayeredTemporalRep> {
        if w.sample_rate != MEL_SAMPLE_RATE {
            return Err(Error::invalid(format!(
                "mel encoder expects {MEL_SAMPLE_RATE} Hz audio, got {} Hz",
                w.sample_rate
            )));
        }
        let power = self.plan.power(&w.samples)?;
        let mel = power.dot(&self.filters.t()).mapv(|p| (p + MEL_EPS).ln());
        LayeredTemporalRep::from_matrix(mel, self.frame_rate_hz())
    }
}

pub fn encode_mel(w: &Waveform, n_mels: usize) -> Result<LayeredTemporalRep> {
    MelEncoder::new(n_mels)?.encode(w)
}

pub const WRX1_MAGIC: &[u8; 4] = b"WRX1";
pub const WRX1_HEADER_LEN: usize = 20;

/// Serialize to the WRX1 byte layout.
pub fn wrx1_bytes(rep: &LayeredTemporalRep) -> Vec<u8> {
    let (l, t, f) = rep.values.dim();
    let mut out = Vec::with_capacity(WRX1_HEADER_LEN + 4 * l * t * f);
    out.extend_from_slice(WRX1_MAGIC);
    for d in [l, t, f] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(rep.frame_rate_hz as f32).to_le_bytes());
    for v in rep.values.iter() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn parse_wrx1(bytes: &[u8]) -> Result<LayeredTemporalRep> {
    if bytes.len() < WRX1_HEADER_LEN {
        return Err(Error::format(format!(
            "WRX1 header needs {WRX1_HEADER_LEN} bytes, file has {}",
            bytes.len()
        )));
    }
    if &bytes[..4] != WRX1_MAGIC {
        return Err(Error::format(format!("bad magic {:?}, expected \"WRX1\"", &bytes[..4])));
    }
    let word = |i: usize| [bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]];
    let l = u32::from_le_bytes(word(4)) as usize;
    let t = u32::from_le_bytes(word(8)) as usize;
    let f = u32::from_le_bytes(word(12)) as usize;
    let rate = f32::from_le_bytes(word(16)) as f64;
    let expected = l
        .checked_mul(t)
        .and_then(|n| n.checked_mul(f))
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::format(format!("WRX1 dimensions {l}x{t}x{f} overflow")))?;
    let actual = bytes.len() - WRX1_HEADER_LEN;
    if actual != expected {
        return Err(Error::format(format!(
            "WRX1 payload for {l}x{t}x{f} must be {expected} bytes, found {actual}"
        )));
    }
    let values: Vec<f64> = bytes[WRX1_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let values = Array3::from_shape_vec((l, t, f), values).expect("length checked above");
    LayeredTemporalRep::new(values, rate).map_err(|e| Error::format(e.to_string()))
}

pub fn write_wrx1(rep: &LayeredTemporalRep, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&wrx1_bytes(rep)).map_err(|e| Error::io(path, e))
}

pub fn load_wrx1(path: impl AsRef<Path>) -> Result<LayeredTemporalRep> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_wrx1(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Per-layer, per-feature standardization with statistics gathered over
/// every frame of a reference set (normally the training split).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureNorm {
    /// L×F
    pub mean: Array2<f64>,
    /// L×F multipliers, `1 / std` (1 where a feature is constant)
    pub scale: Array2<f64>,
}

impl FeatureNorm {
    pub fn identity(n_layers: usize, n_features: usize) -> Self {
        Self {
            mean: Array2::zeros((n_layers, n_features)),
            scale: Array2::ones((n_layers, n_features)),
        }
    }

    pub fn fit<'a>(reps: impl IntoIterator<Item = &'a LayeredTemporalRep>) -> Result<Self> {
        let mut sum: Option<(Array2<f64>, Array2<f64>)> = None;
        let mut count = 0usize;
        for rep in reps {
            let (l, t, f) = rep.values.dim();
            let (s1, s2) = sum.get_or_insert_with(|| (Array2::zeros((l, f)), Array2::zeros((l, f))));
            if s1.dim() != (l, f) {
                return Err(Error::invalid(format!(
                    "representation with {l} layers of {f} features differs from {:?}",
                    s1.dim()
                )));
            }
            for layer in 0..l {
                for frame in rep.values.slice(s![layer, .., ..]).rows() {
                    let mut r1 = s1.row_mut(layer);
                    r1 += &frame;
                    let mut r2 = s2.row_mut(layer);
                    r2 += &frame.mapv(|v| v * v);
                }
            }
            count += t;
        }
        let (s1, s2) = sum.ok_or_else(|| Error::invalid("feature statistics need at least one representation"))?;
        let mean = s1 / count as f64;
        let var = (s2 / count as f64 - &mean * &mean).mapv(|v| v.max(0.0));
        let scale = var.mapv(|v| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 });
        Ok(Self { mean, scale })
    }

    pub fn apply(&self, rep: &LayeredTemporalRep) -> Result<LayeredTemporalRep> {
        let (l, _, f) = rep.values.dim();
        if self.mean.dim() != (l, f) {
            return Err(Error::invalid(format!(
                "normalizer is for {:?} layers x features, representation has ({l}, {f})",
                self.mean.dim()
            )));
        }
        let mut values = rep.values.clone();
        for (layer, mut block) in values.outer_iter_mut().enumerate() {
            let (m, sc) = (self.mean.row(layer), self.scale.row(layer));
            for mut frame in block.rows_mut() {
                frame -= &m;
                frame *= &sc;
            }
        }
        LayeredTemporalRep::new(values, rep.frame_rate_hz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mono(samples: Vec<f64>, rate: u32) -> Audio {
        Waveform::new(samples, rate).unwrap().into()
    }

    #[test]
    fn centring() {
        let a = LayeredTemporalRep::from_matrix(ndarray::array![[1.0, 5.0], [3.0, 5.0]], 50.0).unwrap();
        assert_eq!(a.centred().values, ndarray::array![[[-1.0, 0.0], [1.0, 0.0]]]);
    }

    #[test]
    fn feature_norm_standardizes() {
        let a = LayeredTemporalRep::from_matrix(ndarray::array![[1.0, 5.0], [3.0, 5.0]], 50.0).unwrap();
        let b = LayeredTemporalRep::from_matrix(ndarray::array![[5.0, 5.0], [7.0, 5.0]], 50.0).unwrap();
        let norm = FeatureNorm::fit([&a, &b]).unwrap();
        assert_eq!(norm.mean, ndarray::array![[4.0, 5.0]]);
        assert_eq!(norm.scale, ndarray::array![[1.0 / 5f64.sqrt(), 1.0]]);
        let z = norm.apply(&a).unwrap();
        assert!((z.values()[(0, 0, 0)] + 3.0 / 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(z.values()[(0, 1, 1)], 0.0);
        assert_eq!(FeatureNorm::identity(1, 2).apply(&a).unwrap(), a);
    }

    #[test]
    fn stereo_is_averaged() {
        let audio = Audio {
            channels: vec![vec![1.0, 0.2], vec![0.5, -0.2]],
            sample_rate: 16000,
        };
        let cfg = PreprocessConfig {
            min_duration_s: 1e-4,
            ..Default::default()
        };
        let w = preprocess(&audio, &cfg).unwrap();
        // mono (0.75, 0.0) then peak normalization
        assert_eq!(&w.samples[..2], &[1.0, 0.0]);
    }

    #[test]
    fn peak_normalization_then_padding() {
        let w = preprocess(&mono(vec![0.5, -0.25], 16000), &PreprocessConfig::default()).unwrap();
        assert_eq!(w.len(), 16000);
        assert_eq!(&w.samples[..2], &[1.0, -0.5]);
        assert!(w.samples[2..].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn long_audio_is_truncated_to_head() {
        let x: Vec<f64> = (0..176000).map(|i| ((i % 100) as f64 - 50.0) / 50.0).collect();
        let w = preprocess(&mono(x.clone(), 16000), &PreprocessConfig::default()).unwrap();
        assert_eq!(w.len(), 160000);
        assert_eq!(w.samples[..100], x[..100]);
    }

    #[test]
    fn silence_and_empty() {
        let w = preprocess(&mono(vec![0.0; 20000], 16000), &PreprocessConfig::default()).unwrap();
        assert!(w.samples.iter().all(|&s| s == 0.0));
        assert!(preprocess(&mono(vec![], 16000), &PreprocessConfig::default()).is_err());
    }

    #[test]
    fn mel_framing() {
        let w = Waveform::new(vec![0.0; 16000], 16000).unwrap();
        let rep = encode_mel(&w, 40).unwrap();
        assert_eq!((rep.n_layers(), rep.n_frames(), rep.n_features()), (1, 49, 40));
        assert_eq!(rep.frame_rate_hz(), 50.0);
        let floor = MEL_EPS.ln();
        assert!(rep.values().iter().all(|&v| v == floor));

        let w10 = Waveform::new(vec![0.1; 160000], 16000).unwrap();
        assert_eq!(encode_mel(&w10, 64).unwrap().values().dim(), (1, 499, 64));
        assert!(encode_mel(&Waveform::new(vec![0.0; 8000], 8000).unwrap(), 40).is_err());
    }

    #[test]
    fn wrx1_sizes() {
        let rep = LayeredTemporalRep::new(Array3::zeros((1, 2, 3)), 50.0).unwrap();
        let bytes = wrx1_bytes(&rep);
        assert_eq!(bytes.len(), 20 + 6 * 4);
        assert!(bytes[20..].iter().all(|&b| b == 0));
        let rep = LayeredTemporalRep::new(Array3::zeros((2, 3, 4)), 50.0).unwrap();
        assert_eq!(wrx1_bytes(&rep).len(), 116);
    }

    #[test]
    fn wrx1_rejects_bad_magic_and_truncation() {
        let rep = LayeredTemporalRep::new(Array3::from_elem((13, 4, 6), 0.5), 50.0).unwrap();
        let mut bytes = wrx1_bytes(&rep);
        let mut bad = bytes.clone();
        bad[..4].copy_from_slice(b"XXXX");
        assert!(matches!(parse_wrx1(&bad), Err(Error::Format(_))));
        bytes.truncate(bytes.len() - 4);
        match parse_wrx1(&bytes) {
            Err(Error::Format(msg)) => {
                assert!(msg.contains(&(13 * 4 * 6 * 4).to_string()), "{msg}");
                assert!(msg.contains(&(13 * 4 * 6 * 4 - 4).to_string()), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrx1_header_size_arithmetic() {
        let mut header = Vec::new();
        header.extend_from_slice(b"WRX1");
        for d in [13u32, 499, 768] {
            header.extend_from_slice(&d.to_le_bytes());
        }
        header.extend_from_slice(&50f32.to_le_bytes());
        let mut full = header.clone();
        full.resize(20 + 13 * 499 * 768 * 4, 0);
        assert_eq!(parse_wrx1(&full).unwrap().values().dim(), (13, 499, 768));
        full.pop();
        assert!(parse_wrx1(&full).is_err());
    }
}
