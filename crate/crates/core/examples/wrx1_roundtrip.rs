//! Precomputed encoder states in the WRX1 format: write, reload, and score
//! with a model sized to match. Values are stored as f32, so they survive
//! the round trip exactly when they are representable in single precision.
//!
//! cargo run --release --example wrx1_roundtrip

use ndarray::Array3;
use wavrx::encoders::{load_wrx1, write_wrx1, wrx1_bytes, LayeredTemporalRep};
use wavrx::model::{Model, ModelConfig};

fn main() -> wavrx::Result<()> {
    let small = LayeredTemporalRep::new(
        Array3::from_shape_fn((2, 3, 4), |(l, t, f)| (l + t + f) as f64 * 0.25),
        50.0,
    )?;
    println!("2x3x4 tensor -> {} bytes", wrx1_bytes(&small).len());

    let (l, t, f) = (4, 250, 16);
    let rep = LayeredTemporalRep::new(
        Array3::from_shape_fn((l, t, f), |(l, t, f)| ((l * 7 + t * 3 + f) % 11) as f64 / 16.0),
        50.0,
    )?;
    let path = std::env::temp_dir().join("wavrx_example.wrx1");
    write_wrx1(&rep, &path)?;
    let back = load_wrx1(&path)?;
    println!(
        "reloaded {:?} at {} Hz, identical: {}",
        back.values().dim(),
        back.frame_rate_hz(),
        back == rep
    );

    let model = Model::new(ModelConfig {
        n_layers: l,
        n_features: f,
        ..Default::default()
    })?;
    let out = model.infer(&back)?;
    println!("logit {:.4}, embedding of {} values", out.logit, out.embedding.len());
    let _ = std::fs::remove_file(path);
    Ok(())
}
