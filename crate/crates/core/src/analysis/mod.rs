//! Evaluation metrics and interpretability tools.

mod interpret;
mod metrics;
mod probe;

pub use interpret::{
    f_ratio_from_maps, f_ratio_from_moments, f_ratio_map, layer_importance, sample_sparsity, sparsity, FRatioMap,
    MapMoments, MapPeak, SparsityReport, FRATIO_EPS, FRATIO_FLOOR, SPARSITY_THRESHOLD,
};
pub use metrics::{auc_roc, f1_macro, predict, Confusion};
pub use probe::{speaker_probe, stratified_split, Lda, ProbeResult, DEFAULT_SHRINKAGE, DEFAULT_TRAIN_FRAC};
