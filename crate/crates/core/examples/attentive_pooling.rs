//! Attentive statistics pooling: uniform attention reduces to the plain mean
//! and population standard deviation; a scoring vector that favours
//! large first features shifts both statistics.
//!
//! cargo run --release --example attentive_pooling

use ndarray::{array, Array1};
use wavrx::model::{asp, softmax, AttentionParams};

fn main() {
    let h = array![[1.0, 10.0], [3.0, 10.0]];
    let uniform = AttentionParams::zeros(4, 2);
    println!("uniform attention: {}", asp(h.view(), &uniform));

    let h = array![[0.0, 1.0], [1.0, 2.0], [2.0, 4.0], [3.0, 8.0]];
    let mut attn = AttentionParams::zeros(1, 2);
    attn.w = array![[2.0, 0.0]];
    attn.v = Array1::from(vec![3.0]);
    let scores: Vec<f64> = h
        .rows()
        .into_iter()
        .map(|r| (attn.w.row(0).dot(&r) + attn.b[0]).tanh() * attn.v[0])
        .collect();
    println!(
        "attention weights: {:?}",
        softmax(&scores).iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>()
    );
    println!("pooled [mu | sigma]: {}", asp(h.view(), &attn));
    println!("plain  [mu | sigma]: {}", asp(h.view(), &AttentionParams::zeros(1, 2)));
}
