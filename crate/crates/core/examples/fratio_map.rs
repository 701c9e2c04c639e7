//! F-ratio between two groups of modulation dynamics: one group has a
//! 1 Hz envelope on feature 2, the other does not.
//!
//! cargo run --release --example fratio_map [out.tsv]

use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavrx::analysis::f_ratio_map;
use wavrx::dsp::StftConfig;
use wavrx::dynamics::ModulationTransform;

fn main() -> wavrx::Result<()> {
    let rate = 50.0;
    let tr = ModulationTransform::new(&StftConfig::new(8000.0, 2000.0, 400), rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut groups = (Vec::new(), Vec::new());
    for i in 0..40 {
        let depth = if i % 2 == 1 { 1.0 } else { 0.0 };
        let phase = rng.gen_range(0.0..2.0 * PI);
        let rep = Array2::from_shape_fn((1200, 4), |(t, f)| {
            let noise = rng.gen_range(-0.5..0.5);
            let env = if f == 2 {
                depth * (2.0 * PI * t as f64 / rate + phase).sin()
            } else {
                0.0
            };
            env + noise
        });
        let d = tr.forward(rep.view())?;
        if i % 2 == 1 {
            groups.0.push(d)
        } else {
            groups.1.push(d)
        }
    }
    let map = f_ratio_map(&groups.0, &groups.1)?;
    let peak = map.argmax();
    println!(
        "peak: feature {} at {} Hz, F = {:.1}; {} of {} pixels >= 1",
        peak.feature,
        peak.freq_hz,
        peak.value,
        map.n_significant(),
        map.values.len()
    );
    if let Some(path) = std::env::args().nth(1) {
        map.write_tsv(&path)?;
        println!("wrote {path}");
    }
    Ok(())
}
