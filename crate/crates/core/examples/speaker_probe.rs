//! LDA speaker probe trained on 10% of each speaker's embeddings. Speaker
//! offsets make identity recoverable; shrinking them toward zero brings the
//! probe down to chance (one in ten).
//!
//! cargo run --release --example speaker_probe

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wavrx::analysis::{speaker_probe, DEFAULT_SHRINKAGE};

fn main() -> wavrx::Result<()> {
    let (n_speakers, per_speaker, dim) = (10, 20, 32);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let centres: Vec<Vec<f64>> = (0..n_speakers)
        .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    for offset in [2.0, 0.5, 0.1, 0.0] {
        let mut emb = Vec::new();
        let mut spk = Vec::new();
        for (s, centre) in centres.iter().enumerate() {
            for _ in 0..per_speaker {
                emb.push(
                    centre
                        .iter()
                        .map(|c| offset * c + rng.sample::<f64, _>(StandardNormal))
                        .collect::<Vec<f64>>(),
                );
                spk.push(format!("spk{s:02}"));
            }
        }
        let r = speaker_probe(&emb, &spk, 0.1, DEFAULT_SHRINKAGE, 0)?;
        println!(
            "offset scale {offset:>4}: accuracy {:.3} ({} train / {} test)",
            r.accuracy, r.n_train, r.n_test
        );
    }
    Ok(())
}
