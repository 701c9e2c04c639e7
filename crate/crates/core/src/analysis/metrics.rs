//! Binary classification metrics.

use crate::error::{Error, Result};

fn check_labels(labels: &[u8]) -> Result<()> {
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::invalid(format!("label {bad} is not binary")));
    }
    Ok(())
}

/// Rank-based area under the ROC curve. Tied scores share their average
/// rank, which credits a tied positive/negative pair with one half.
///
/// For a single binary decision the one-vs-rest AUC of either class is the
/// same number, so this is also the macro average.
pub fn auc_roc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    check_labels(labels)?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("scores contain NaN"));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "AUC needs both classes, got {n_pos} positive and {n_neg} negative"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    // twice the rank sum keeps half ranks integral
    let mut rank_sum_x2: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1, average (i + j + 2) / 2
        let avg_x2 = (i + j + 2) as u64;
        let pos_in_run = order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as u64;
        rank_sum_x2 += avg_x2 * pos_in_run;
        i = j + 1;
    }
    let (p, n) = (n_pos as u64, n_neg as u64);
    let u_x2 = rank_sum_x2 - p * (p + 1);
    Ok(u_x2 as f64 / (2 * p * n) as f64)
}

/// Counts of a binary confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(preds: &[u8], labels: &[u8]) -> Result<Self> {
        if preds.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} predictions for {} labels",
                preds.len(),
                labels.len()
            )));
        }
        check_labels(preds)?;
        check_labels(labels)?;
        let mut c = Confusion::default();
        for (&p, &l) in preds.iter().zip(labels) {
            match (p, l) {
                (1, 1) => c.tp += 1,
                (1, 0) => c.fp += 1,
                (0, 0) => c.tn += 1,
                _ => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.tp + self.fp + self.tn + self.fn_;
        (self.tp + self.tn) as f64 / total as f64
    }
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

/// Unweighted mean of the positive-class and negative-class F1 scores.
pub fn f1_macro(preds: &[u8], labels: &[u8]) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::invalid("no predictions"));
    }
    let c = Confusion::from_predictions(preds, labels)?;
    let pos = f1(c.tp, c.fp, c.fn_);
    let neg = f1(c.tn, c.fn_, c.fp);
    Ok((pos + neg) / 2.0)
}

/// Decision rule: sigmoid(logit) >= 0.5.
pub fn predict(logit: f64) -> u8 {
    u8::from(logit >= 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_examples() {
        assert_eq!(auc_roc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(auc_roc(&[0.3; 6], &[0, 1, 0, 1, 1, 0]).unwrap(), 0.5);
        assert_eq!(auc_roc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
        assert!(matches!(auc_roc(&[0.1, 0.2], &[1, 1]), Err(Error::UndefinedMetric(_))));
        assert!(auc_roc(&[0.1], &[1, 0]).is_err());
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1_macro(&[0, 1, 1, 0], &[0, 1, 1, 0]).unwrap(), 1.0);
        assert!((f1_macro(&[1, 1, 1, 1], &[1, 0, 1, 0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(f1_macro(&[0, 1], &[1, 0]).unwrap(), 0.0);
        assert!(matches!(f1_macro(&[0, 1], &[1]), Err(Error::InvalidArgument(_))));
        assert!(f1_macro(&[2], &[1]).is_err());
    }

    #[test]
    fn decision_threshold() {
        assert_eq!(predict(0.0), 1);
        assert_eq!(predict(-1e-12), 0);
    }
}
