//! Finite-difference check of the hand-written reverse pass.

use ndarray::Array1;

use crate::encoders::LayeredTemporalRep;
use crate::error::Result;
use crate::model::Model;
use crate::training::{bce_grad, bce_loss};

#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub name: &'static str,
    /// `|g_a - g_n| / max(|g_a|, |g_n|)` over the whole tensor (Euclidean
    /// norms); 0 when both gradients vanish.
    pub rel_err: f64,
    pub max_abs_diff: f64,
    pub n: usize,
}

fn loss_at(model: &Model, rep: &LayeredTemporalRep, label: u8, drop: &Option<Array1<f64>>) -> Result<f64> {
    let (out, _) = model.forward_traced(rep, drop.clone())?;
    Ok(bce_loss(out.logit, label))
}

/// Compare analytic BCE gradients with central differences of step `h` for
/// every trainable tensor. `drop` fixes the dropout scale vector so the
/// loss is a deterministic function of the parameters.
pub fn check_gradients(
    model: &Model,
    rep: &LayeredTemporalRep,
    label: u8,
    drop: Option<Array1<f64>>,
    h: f64,
) -> Result<Vec<TensorCheck>> {
    let (out, trace) = model.forward_traced(rep, drop.clone())?;
    let analytic = model.backward(rep, &trace, bce_grad(out.logit, label))?;
    let mut probe = model.clone();
    let mut report = Vec::new();
    for (ti, (name, grad)) in analytic.tensors().into_iter().enumerate() {
        let mut numeric = vec![0.0; grad.len()];
        for (i, slot) in numeric.iter_mut().enumerate() {
            let orig = probe.params.tensors()[ti].1[i];
            probe.params.tensors_mut()[ti].1[i] = orig + h;
            let up = loss_at(&probe, rep, label, &drop)?;
            probe.params.tensors_mut()[ti].1[i] = orig - h;
            let down = loss_at(&probe, rep, label, &drop)?;
            probe.params.tensors_mut()[ti].1[i] = orig;
            *slot = (up - down) / (2.0 * h);
        }
        let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
        let diff = norm(&mut grad.iter().zip(&numeric).map(|(a, b)| a - b));
        let scale = norm(&mut grad.iter().copied()).max(norm(&mut numeric.iter().copied()));
        let max_abs_diff = grad
            .iter()
            .zip(&numeric)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        report.push(TensorCheck {
            name,
            rel_err: if scale == 0.0 { 0.0 } else { diff / scale },
            max_abs_diff,
            n: grad.len(),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Branches, ModelConfig};
    use ndarray::Array3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_model_matches() {
        let cfg = ModelConfig {
            n_layers: 2,
            n_features: 3,
            attn_hidden: 4,
            embed_dim: 6,
            branches: Branches::Both,
            seed: 4,
            ..Default::default()
        };
        let mut model = Model::new(cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (_, t) in model.params.tensors_mut() {
            for v in t {
                *v += rng.gen_range(-0.3..0.3);
            }
        }
        let rep =
            LayeredTemporalRep::new(Array3::from_shape_fn((2, 20, 3), |_| rng.gen_range(-1.0..1.0)), 50.0).unwrap();
        for c in check_gradients(&model, &rep, 1, None, 1e-4).unwrap() {
            assert!(c.rel_err < 1e-4, "{c:?}");
        }
    }
}
