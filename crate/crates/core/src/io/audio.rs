//! WAV file reading and writing.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::dsp::Waveform;
use crate::encoders::Audio;
use crate::error::{Error, Result};

fn wav_err(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::format(format!("{}: {other}", path.display())),
    }
}

/// Read any PCM or float WAV into per-channel samples scaled to [-1, 1].
pub fn read_wav(path: impl AsRef<Path>) -> Result<Audio> {
    let path = path.as_ref();
    let mut reader = WavReader::open(path).map_err(|e| wav_err(path, e))?;
    let spec = reader.spec();
    let n_ch = spec.channels as usize;
    let interleaved: Vec<f64> = match spec.sample_format {
        SampleFormat::Float => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>(),
        SampleFormat::Int => {
            let scale = 2f64.powi(spec.bits_per_sample as i32 - 1);
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
        }
    }
    .map_err(|e| wav_err(path, e))?;
    let mut channels = vec![Vec::with_capacity(interleaved.len() / n_ch.max(1)); n_ch];
    for frame in interleaved.chunks_exact(n_ch) {
        for (c, &v) in frame.iter().enumerate() {
            channels[c].push(v);
        }
    }
    Ok(Audio {
        channels,
        sample_rate: spec.sample_rate,
    })
}

/// Write a mono 32-bit float WAV.
pub fn write_wav(path: impl AsRef<Path>, w: &Waveform) -> Result<()> {
    let path = path.as_ref();
    let spec = WavSpec {
        channels: 1,
        sample_rate: w.sample_rate,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| wav_err(path, e))?;
    for &s in &w.samples {
        writer.write_sample(s as f32).map_err(|e| wav_err(path, e))?;
    }
    writer.finalize().map_err(|e| wav_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.wav");
        let w = Waveform::new(vec![0.0, 0.5, -0.25, 1.0], 8000).unwrap();
        write_wav(&p, &w).unwrap();
        let a = read_wav(&p).unwrap();
        assert_eq!(a.sample_rate, 8000);
        assert_eq!(a.channels, vec![w.samples.clone()]);
    }

    #[test]
    fn int16_stereo() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 16000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut wr = WavWriter::create(&p, spec).unwrap();
        for v in [16384i16, -32768, 0, 8192] {
            wr.write_sample(v).unwrap();
        }
        wr.finalize().unwrap();
        let a = read_wav(&p).unwrap();
        assert_eq!(a.channels, vec![vec![0.5, 0.0], vec![-1.0, 0.25]]);
    }

    #[test]
    fn missing_and_garbage() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_wav(dir.path().join("nope.wav")), Err(Error::Io { .. })));
        let p = dir.path().join("junk.wav");
        std::fs::write(&p, b"not a wav file at all").unwrap();
        assert!(matches!(read_wav(&p), Err(Error::Format(_))));
    }
}
