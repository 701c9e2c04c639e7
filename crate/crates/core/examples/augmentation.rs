//! Noise at a target SNR, synthetic reverberation and speed change applied
//! to a one-second tone.
//!
//! cargo run --release --example augmentation

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wavrx::dsp::Waveform;
use wavrx::training::{add_noise_snr, augment, reverberate, speed_perturb, AugmentConfig};

fn power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

fn main() -> wavrx::Result<()> {
    let sr = 16000;
    let tone = Waveform::new(
        (0..sr)
            .map(|n| (2.0 * PI * 220.0 * n as f64 / sr as f64).sin())
            .collect(),
        sr as u32,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let noisy = add_noise_snr(&tone, 5.0, &mut rng);
    let noise: Vec<f64> = noisy.samples.iter().zip(&tone.samples).map(|(a, b)| a - b).collect();
    println!(
        "noise: SNR {:.3} dB",
        10.0 * (power(&tone.samples) / power(&noise)).log10()
    );

    // broadband input: the energy-normalized response keeps the level
    let hiss = Waveform::new((0..sr).map(|_| rng.sample(StandardNormal)).collect(), sr as u32)?;
    let wet = reverberate(&hiss, 0.6, &mut rng);
    println!(
        "reverb: length {} (unchanged), energy ratio on noise {:.3}",
        wet.len(),
        power(&wet.samples) / power(&hiss.samples)
    );

    for factor in [0.95, 1.05] {
        println!(
            "speed x{factor}: {} -> {} samples",
            tone.len(),
            speed_perturb(&tone, factor)?.len()
        );
    }

    let cfg = AugmentConfig {
        enabled: true,
        ..Default::default()
    };
    let copies = augment(&tone, &cfg, &mut rng)?;
    println!("augment() returns {} waveforms (original first)", copies.len());
    Ok(())
}
