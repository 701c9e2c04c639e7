//! Synthetic two-class corpus: amplitude-modulated carriers with a fixed
//! spectral tilt per speaker.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dsp::Waveform;
use crate::error::{Error, Result};
use crate::io::audio::write_wav;
use crate::io::manifest::{DatasetManifest, Record, Split};

/// Output peak of every generated file.
pub const SYNTH_PEAK: f64 = 0.9;
/// Tilt reference frequency and the floor below which gain stays flat.
const TILT_REF_HZ: f64 = 1000.0;
const TILT_FLOOR_HZ: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Carrier {
    Noise,
    Sawtooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCorpusSpec {
    pub n_per_class: usize,
    pub duration_s: f64,
    pub sample_rate: u32,
    pub carrier: Carrier,
    pub mod_freq_hz: f64,
    pub mod_depth: f64,
    /// Spacing between neighbouring speakers' tilts; tilts are centred on 0.
    pub speaker_tilt_db_per_octave: f64,
    pub n_speakers: usize,
    pub seed: u64,
}

impl Default for SyntheticCorpusSpec {
    fn default() -> Self {
        Self {
            n_per_class: 100,
            duration_s: 10.0,
            sample_rate: 16000,
            carrier: Carrier::Noise,
            mod_freq_hz: 0.3,
            mod_depth: 0.5,
            speaker_tilt_db_per_octave: 3.0,
            n_speakers: 10,
            seed: 0,
        }
    }
}

impl SyntheticCorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.mod_freq_hz > 0.0 && self.mod_freq_hz < 2.0) {
            return Err(Error::invalid(format!(
                "mod_freq_hz {} outside (0, 2)",
                self.mod_freq_hz
            )));
        }
        if !(0.0..=1.0).contains(&self.mod_depth) {
            return Err(Error::invalid(format!("mod_depth {} outside [0, 1]", self.mod_depth)));
        }
        if self.n_speakers < 3 {
            return Err(Error::invalid("need at least 3 speakers for train/valid/test"));
        }
        if self.n_per_class == 0 || self.duration_s <= 0.0 || self.sample_rate == 0 {
            return Err(Error::invalid("counts, duration and sample rate must be positive"));
        }
        Ok(())
    }

    fn split_sizes(&self) -> (usize, usize, usize) {
        let n = self.n_speakers;
        let n_valid = ((0.1 * n as f64).round() as usize).max(1);
        let n_test = ((0.2 * n as f64).round() as usize).max(1);
        (n - n_valid - n_test, n_valid, n_test)
    }

    /// Rank of each speaker's tilt. Held-out (valid and test) speakers take
    /// evenly spaced interior ranks so their tilts lie inside the range seen
    /// in training.
    fn tilt_ranks(&self) -> Vec<usize> {
        let n = self.n_speakers;
        let (n_train, n_valid, n_test) = self.split_sizes();
        let n_hold = n_valid + n_test;
        let held: Vec<usize> = if n_hold + 2 <= n {
            let interior = (n - 2) as f64;
            (0..n_hold)
                .map(|j| 1 + ((j as f64 + 0.5) * interior / n_hold as f64).floor() as usize)
                .collect()
        } else {
            (n_train..n).collect()
        };
        let mut free = (0..n).filter(|r| !held.contains(r));
        let mut ranks: Vec<usize> = (0..n_train).map(|_| free.next().expect("enough ranks")).collect();
        ranks.extend(held);
        ranks
    }

    /// Tilt in dB per octave, spaced `speaker_tilt_db_per_octave` apart and
    /// centred on zero.
    pub fn speaker_tilt(&self, speaker: usize) -> f64 {
        let rank = self.tilt_ranks()[speaker];
        self.speaker_tilt_db_per_octave * (rank as f64 - (self.n_speakers as f64 - 1.0) / 2.0)
    }

    /// Speaker-level 70/10/20 partition (at least one speaker per split).
    pub fn speaker_split(&self, speaker: usize) -> Split {
        let (n_train, n_valid, _) = self.split_sizes();
        if speaker < n_train {
            Split::Train
        } else if speaker < n_train + n_valid {
            Split::Valid
        } else {
            Split::Test
        }
    }
}

/// One labelled utterance of the corpus, without touching the filesystem.
/// Utterance `i` has label `i % 2` and speaker `(i / 2) % n_speakers`.
pub fn synth_utterance(spec: &SyntheticCorpusSpec, index: usize) -> Result<(Waveform, u8, usize)> {
    spec.validate()?;
    let label = (index % 2) as u8;
    let speaker = (index / 2) % spec.n_speakers;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64 + 1);
    let sr = spec.sample_rate as f64;
    let n = (spec.duration_s * sr).round() as usize;
    let carrier: Vec<f64> = match spec.carrier {
        Carrier::Noise => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
        Carrier::Sawtooth => {
            let f0 = rng.gen_range(90.0..180.0);
            let phase0: f64 = rng.gen();
            (0..n)
                .map(|i| {
                    let p = (phase0 + f0 * i as f64 / sr).fract();
                    2.0 * p - 1.0
                })
                .collect()
        }
    };
    let depth = if label == 1 { spec.mod_depth } else { 0.0 };
    let modulated: Vec<f64> = carrier
        .iter()
        .enumerate()
        .map(|(i, c)| c * (1.0 + depth * (2.0 * PI * spec.mod_freq_hz * i as f64 / sr).sin()))
        .collect();
    let mut samples = apply_tilt(&modulated, sr, spec.speaker_tilt(speaker));
    let peak = samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        samples.iter_mut().for_each(|s| *s *= SYNTH_PEAK / peak);
    }
    Ok((Waveform::new(samples, spec.sample_rate)?, label, speaker))
}

/// Zero-phase filter with gain `tilt_db` per octave around 1 kHz.
pub fn apply_tilt(x: &[f64], sample_rate: f64, tilt_db: f64) -> Vec<f64> {
    if tilt_db == 0.0 || x.is_empty() {
        return x.to_vec();
    }
    let n = x.len();
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let bin = k.min(n - k);
        let hz = (bin as f64 * sample_rate / n as f64).max(TILT_FLOOR_HZ);
        let gain = 10f64.powf(tilt_db * (hz / TILT_REF_HZ).log2() / 20.0);
        *c *= gain / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

/// Write the corpus as WAV files plus `manifest.csv` into `out_dir`.
pub fn generate_synthetic(spec: &SyntheticCorpusSpec, out_dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut records = Vec::with_capacity(2 * spec.n_per_class);
    for i in 0..2 * spec.n_per_class {
        let (w, label, speaker) = synth_utterance(spec, i)?;
        let id = format!("utt{i:04}");
        let file = format!("{id}.wav");
        write_wav(out_dir.join(&file), &w)?;
        records.push(Record {
            id,
            path: PathBuf::from(file),
            label,
            speaker: format!("spk{speaker:02}"),
            split: spec.speaker_split(speaker),
        });
    }
    let manifest = DatasetManifest::new(records, out_dir)?;
    manifest.write(out_dir.join("manifest.csv"))?;
    Ok(manifest)
}
