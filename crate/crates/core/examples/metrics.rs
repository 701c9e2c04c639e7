//! AUC with tied scores, macro F1 and the confusion matrix behind it.
//!
//! cargo run --release --example metrics

use wavrx::analysis::{auc_roc, f1_macro, predict, Confusion};
use wavrx::Error;

fn main() -> wavrx::Result<()> {
    let logits = [-2.0, -0.5, 0.3, 0.3, 1.2, -0.1, 2.5, 0.3];
    let labels = [0, 0, 0, 1, 1, 1, 1, 0];
    let preds: Vec<u8> = logits.iter().copied().map(predict).collect();
    println!("AUC      {:.4}", auc_roc(&logits, &labels)?);
    println!("macro F1 {:.4}", f1_macro(&preds, &labels)?);
    println!("{:?}", Confusion::from_predictions(&preds, &labels)?);

    match auc_roc(&[0.1, 0.9], &[1, 1]) {
        Err(Error::UndefinedMetric(msg)) => println!("single-class split: {msg}"),
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}
