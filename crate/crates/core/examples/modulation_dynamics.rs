//! Modulation dynamics of a two-channel series: one channel carries a
//! 0.5 Hz envelope, the other is constant. Compares the default short
//! window with a long one.
//!
//! cargo run --release --example modulation_dynamics

use std::f64::consts::PI;

use ndarray::Array2;
use wavrx::dsp::StftConfig;
use wavrx::dynamics::ModulationTransform;

fn main() -> wavrx::Result<()> {
    let rate = 50.0;
    let t = 800; // 16 s
    let rep = Array2::from_shape_fn((t, 2), |(i, f)| {
        if f == 0 {
            (2.0 * PI * 0.5 * i as f64 / rate).sin()
        } else {
            1.0
        }
    });
    for (label, cfg) in [
        ("256 ms window", StftConfig::default()),
        ("8 s window", StftConfig::new(8000.0, 2000.0, 400)),
    ] {
        let tr = ModulationTransform::new(&cfg, rate)?;
        let d = tr.forward(rep.view())?;
        let avg = d.time_average();
        println!(
            "{label}: {} frames of {} -> tensor {:?}, {} Hz per bin",
            tr.window_frames(),
            tr.hop_frames(),
            d.values.dim(),
            d.mod_bin_hz
        );
        for f in 0..2 {
            let row = avg.row(f);
            let peak = (0..row.len()).fold(0, |b, k| if row[k] > row[b] { k } else { b });
            let half = row[peak] / 2.0;
            let width = row.iter().filter(|v| **v >= half).count();
            println!(
                "  channel {f}: peak at {} Hz, {width} bins above half power",
                peak as f64 * d.mod_bin_hz
            );
        }
    }
    Ok(())
}
