/// Binary cross-entropy on a logit, `log(1 + exp(-(2y - 1) z))`, evaluated
/// without overflow.
pub fn bce_loss(logit: f64, label: u8) -> f64 {
    let sign = if label == 1 { 1.0 } else { -1.0 };
    softplus(-sign * logit)
}

/// Derivative of [`bce_loss`] with respect to the logit.
pub fn bce_grad(logit: f64, label: u8) -> f64 {
    sigmoid(logit) - f64::from(label)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_values() {
        assert!((bce_loss(0.0, 1) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(bce_loss(50.0, 1) < 1e-20);
        assert!((bce_loss(2.0, 0) - (1.0 + 2f64.exp()).ln()).abs() < 1e-14);
        assert!((bce_loss(2.0, 0) - 2.126928).abs() < 1e-6);
        assert!(bce_loss(-800.0, 1).is_finite());
    }

    #[test]
    fn single_weight_derivative() {
        // L(w) = bce(w * x), x = 1, w = 0, y = 1
        assert_eq!(bce_grad(0.0, 1) * 1.0, -0.5);
    }
}
