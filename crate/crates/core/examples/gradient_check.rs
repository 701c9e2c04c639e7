//! Central-difference check of the analytic gradients of a small model
//! (both branches, fixed dropout mask).
//!
//! cargo run --release --example gradient_check

use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavrx::encoders::LayeredTemporalRep;
use wavrx::model::{Branches, Model, ModelConfig};
use wavrx::training::check_gradients;

fn main() -> wavrx::Result<()> {
    let cfg = ModelConfig {
        n_layers: 2,
        n_features: 8,
        attn_hidden: 8,
        embed_dim: 16,
        branches: Branches::Both,
        seed: 1,
        ..Default::default()
    };
    let mut model = Model::new(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (_, t) in model.params.tensors_mut() {
        for v in t {
            *v += rng.gen_range(-0.5..0.5);
        }
    }
    let rep = LayeredTemporalRep::new(Array3::from_shape_fn((2, 20, 8), |_| rng.gen_range(-2.0..2.0)), 50.0)?;
    let mask = model.sample_dropout(&mut rng);
    println!("{:<14} {:>6} {:>12} {:>12}", "tensor", "n", "rel err", "max |diff|");
    for c in check_gradients(&model, &rep, 1, Some(mask), 1e-4)? {
        println!(
            "{:<14} {:>6} {:>12.2e} {:>12.2e}",
            c.name, c.n, c.rel_err, c.max_abs_diff
        );
    }
    Ok(())
}
