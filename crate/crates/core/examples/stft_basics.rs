//! Framing arithmetic and the power STFT used along the time axis of a
//! representation: window/hop in frames, bin spacing, an on-bin sinusoid and
//! a per-frame Parseval check.
//!
//! cargo run --release --example stft_basics

use std::f64::consts::PI;

use wavrx::dsp::{hamming_window, stft_power, StftConfig};

fn main() -> wavrx::Result<()> {
    let rate = 50.0; // encoder frames per second
    let cfg = StftConfig::default();
    let (win, hop) = cfg.frame_lengths(rate)?;
    println!(
        "{} ms window / {} ms hop at {rate} Hz -> {win} frames / {hop} frames, {} bins of {} Hz",
        cfg.window_ms,
        cfg.hop_ms,
        cfg.n_bins(),
        rate / cfg.n_fft as f64
    );

    // A 13-frame window cannot separate 0.125 Hz bins; use a window as long
    // as the transform to see a sinusoid land on its own bin.
    let long = StftConfig::new(8000.0, 2000.0, 400);
    for bin in [4usize, 17, 60] {
        let f = bin as f64 * rate / 400.0;
        let x: Vec<f64> = (0..800).map(|n| (2.0 * PI * f * n as f64 / rate).sin()).collect();
        let spec = stft_power(&x, rate, &long)?;
        let row = spec.values.row(0);
        let peak = (0..row.len()).fold(0, |b, k| if row[k] > row[b] { k } else { b });
        println!(
            "{f:.3} Hz sinusoid: {} frames, peak bin {peak} ({} Hz)",
            spec.n_frames(),
            peak as f64 * spec.bin_hz
        );
    }

    let x: Vec<f64> = (0..100).map(|n| ((n * 37 % 17) as f64 - 8.0) / 8.0).collect();
    let spec = stft_power(&x, rate, &cfg)?;
    let w = hamming_window(win)?;
    let row = spec.values.row(0);
    let k = row.len();
    let one_sided = row[0] + row[k - 1] + 2.0 * row.iter().skip(1).take(k - 2).sum::<f64>();
    let energy: f64 = (0..win).map(|i| (x[i] * w[i]).powi(2)).sum::<f64>() * cfg.n_fft as f64;
    println!("Parseval, first frame: spectrum {one_sided:.6} vs n_fft * energy {energy:.6}");
    Ok(())
}
