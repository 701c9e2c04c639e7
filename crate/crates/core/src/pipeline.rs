//! End-to-end flows over a dataset manifest: feature loading, training,
//! evaluation, embedding extraction and map/probe analyses.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    auc_roc, f1_macro, f_ratio_from_moments, predict, speaker_probe, FRatioMap, MapMoments, ProbeResult,
};
use crate::dsp::Waveform;
use crate::dynamics::ModulationTransform;
use crate::encoders::{
    load_wrx1, preprocess, write_wrx1, Audio, FeatureNorm, LayeredTemporalRep, MelEncoder, PreprocessConfig,
};
use crate::error::{Error, Result};
use crate::io::{read_wav, Checkpoint, DatasetManifest, FeatureNormKind, Record, RunConfig, Split};
use crate::model::{layer_aggregate, Model};
use crate::training::{self, augment, EpochLog, Example};

/// True for paths that hold precomputed representations rather than audio.
pub fn is_tensor_path(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("wrx1") | Some("wrx")
    )
}

/// Audio front end: preprocessing followed by the built-in log-mel encoder
/// (WRX1 inputs bypass both), then the optional input normalizer.
#[derive(Debug, Clone)]
pub struct FrontEnd {
    pub preprocess: PreprocessConfig,
    mel: MelEncoder,
    centre: bool,
    norm: Option<FeatureNorm>,
}

impl FrontEnd {
    pub fn new(preprocess: PreprocessConfig, n_mels: usize) -> Result<Self> {
        preprocess.validate()?;
        Ok(Self {
            preprocess,
            mel: MelEncoder::new(n_mels)?,
            centre: false,
            norm: None,
        })
    }

    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let mut front = Self::new(cfg.preprocess_config(), cfg.n_mels)?;
        front.centre = cfg.feature_norm == FeatureNormKind::Utterance;
        Ok(front)
    }

    /// Front end that reproduces what a checkpoint's model was trained on.
    pub fn for_checkpoint(ck: &Checkpoint) -> Result<Self> {
        Ok(Self::from_config(&ck.config)?.with_norm(ck.norm.clone()))
    }

    pub fn with_norm(mut self, norm: FeatureNorm) -> Self {
        self.norm = Some(norm);
        self
    }

    fn normalize(&self, rep: LayeredTemporalRep) -> Result<LayeredTemporalRep> {
        let rep = if self.centre { rep.centred() } else { rep };
        match &self.norm {
            Some(n) => n.apply(&rep),
            None => Ok(rep),
        }
    }

    pub fn load_waveform(&self, path: &Path) -> Result<Waveform> {
        preprocess(&read_wav(path)?, &self.preprocess)
    }

    /// Encode an already preprocessed waveform.
    pub fn encode(&self, w: &Waveform) -> Result<LayeredTemporalRep> {
        self.normalize(self.mel.encode(w)?)
    }

    /// Representation of an audio or WRX1 file.
    pub fn load(&self, path: &Path) -> Result<LayeredTemporalRep> {
        if is_tensor_path(path) {
            self.normalize(load_wrx1(path)?)
        } else {
            self.encode(&self.load_waveform(path)?)
        }
    }

    /// Clean representation plus, for audio inputs, augmented copies.
    /// Each corrupted waveform is preprocessed again before encoding.
    pub fn load_augmented(
        &self,
        path: &Path,
        cfg: &crate::training::AugmentConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<LayeredTemporalRep>> {
        if is_tensor_path(path) || !cfg.enabled {
            return Ok(vec![self.load(path)?]);
        }
        let clean = self.load_waveform(path)?;
        let mut reps = Vec::new();
        for (i, w) in augment(&clean, cfg, rng)?.into_iter().enumerate() {
            let w = if i == 0 {
                w
            } else {
                preprocess(&Audio::from(w), &self.preprocess)?
            };
            reps.push(self.encode(&w)?);
        }
        Ok(reps)
    }
}

fn with_context(record: &Record, e: Error) -> Error {
    match e {
        Error::Format(m) => Error::Format(format!("record {}: {m}", record.id)),
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("record {}: {m}", record.id)),
        other => other,
    }
}

/// Load every record of one split, in manifest order.
pub fn load_split(manifest: &DatasetManifest, split: Split, front: &FrontEnd) -> Result<Vec<(Record, Example)>> {
    manifest
        .split(split)
        .map(|r| {
            let rep = front.load(&manifest.resolve(r)).map_err(|e| with_context(r, e))?;
            Ok((r.clone(), Example::new(r.id.clone(), rep, r.label)))
        })
        .collect()
}

fn examples(v: Vec<(Record, Example)>) -> Vec<Example> {
    v.into_iter().map(|(_, e)| e).collect()
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub checkpoint: Checkpoint,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
}

/// Train on the `train` split, select on `valid`, and package the selected
/// parameters as a checkpoint.
pub fn train_manifest(
    manifest: &DatasetManifest,
    cfg: &RunConfig,
    on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainRun> {
    cfg.validate()?;
    manifest.require_splits(&[Split::Train, Split::Valid])?;
    let front = FrontEnd::from_config(cfg)?;
    let aug = cfg.augment_config();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0xA0);
    let mut train = Vec::new();
    for r in manifest.split(Split::Train) {
        let reps = front
            .load_augmented(&manifest.resolve(r), &aug, &mut rng)
            .map_err(|e| with_context(r, e))?;
        train.push(Example {
            id: r.id.clone(),
            reps,
            label: r.label,
        });
    }
    let mut valid = examples(load_split(manifest, Split::Valid, &front)?);
    let first = train[0].original();
    let (n_layers, n_features) = (first.n_layers(), first.n_features());
    if let Some(bad) = train.iter().chain(&valid).find(|e| {
        e.reps
            .iter()
            .any(|r| r.n_layers() != n_layers || r.n_features() != n_features)
    }) {
        return Err(Error::format(format!(
            "record {} does not have {n_layers} layers of {n_features} features",
            bad.id
        )));
    }
    let norm = match cfg.feature_norm {
        FeatureNormKind::None | FeatureNormKind::Utterance => FeatureNorm::identity(n_layers, n_features),
        FeatureNormKind::Global => FeatureNorm::fit(train.iter().map(Example::original))?,
    };
    for ex in train.iter_mut().chain(valid.iter_mut()) {
        for rep in ex.reps.iter_mut() {
            *rep = norm.apply(rep)?;
        }
    }
    let model = Model::new(cfg.model_config(n_layers, n_features))?;
    let out = training::train(model, &train, &valid, &cfg.train_config(), on_epoch)?;
    Ok(TrainRun {
        checkpoint: Checkpoint::new(cfg.clone(), out.best, norm)?,
        best_epoch: out.best_epoch,
        log: out.log,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitScores {
    pub split: Split,
    pub n: usize,
    /// `None` when only one class is present.
    pub auc: Option<f64>,
    pub f1: f64,
}

pub fn score(split: Split, model: &Model, examples: &[Example]) -> Result<SplitScores> {
    let logits = training::logits(model, examples)?;
    let labels: Vec<u8> = examples.iter().map(|e| e.label).collect();
    let preds: Vec<u8> = logits.iter().copied().map(predict).collect();
    let auc = match auc_roc(&logits, &labels) {
        Ok(a) => Some(a),
        Err(Error::UndefinedMetric(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(SplitScores {
        split,
        n: examples.len(),
        auc,
        f1: f1_macro(&preds, &labels)?,
    })
}

/// AUC and macro F1 on each requested split that has records.
pub fn evaluate(ck: &Checkpoint, manifest: &DatasetManifest, splits: &[Split]) -> Result<Vec<SplitScores>> {
    let front = FrontEnd::for_checkpoint(ck)?;
    let mut out = Vec::new();
    for &s in splits {
        let ex = examples(load_split(manifest, s, &front)?);
        if !ex.is_empty() {
            out.push(score(s, &ck.model, &ex)?);
        }
    }
    Ok(out)
}

fn selected<'a>(manifest: &'a DatasetManifest, splits: &'a [Split]) -> impl Iterator<Item = &'a Record> {
    manifest.records.iter().filter(move |r| splits.contains(&r.split))
}

/// Health embeddings of the selected records, in manifest order.
pub fn embeddings(ck: &Checkpoint, manifest: &DatasetManifest, splits: &[Split]) -> Result<Vec<(Record, Array1<f64>)>> {
    let front = FrontEnd::for_checkpoint(ck)?;
    selected(manifest, splits)
        .map(|r| {
            let rep = front.load(&manifest.resolve(r)).map_err(|e| with_context(r, e))?;
            Ok((r.clone(), ck.model.infer(&rep)?.embedding))
        })
        .collect()
}

/// Nominal frame rate stamped on embedding files (one vector per utterance).
pub const EMBEDDING_FRAME_RATE: f64 = 1.0;

/// Write one WRX1 file (L=1, T=1, F=E) per record plus a manifest pointing
/// at them.
pub fn extract(
    ck: &Checkpoint,
    manifest: &DatasetManifest,
    splits: &[Split],
    out_dir: &Path,
) -> Result<DatasetManifest> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut records = Vec::new();
    for (r, emb) in embeddings(ck, manifest, splits)? {
        let e = emb.len();
        let values = Array3::from_shape_vec((1, 1, e), emb.to_vec()).expect("1x1xE");
        let rep = LayeredTemporalRep::new(values, EMBEDDING_FRAME_RATE)?;
        let file = format!("{}.wrx1", r.id);
        write_wrx1(&rep, out_dir.join(&file))?;
        records.push(Record { path: file.into(), ..r });
    }
    let m = DatasetManifest::new(records, out_dir)?;
    m.write(out_dir.join("embeddings.csv"))?;
    Ok(m)
}

/// F-ratio between positive and negative records of the layer-weighted
/// representation's modulation dynamics.
pub fn fratio(ck: &Checkpoint, manifest: &DatasetManifest, splits: &[Split]) -> Result<FRatioMap> {
    let front = FrontEnd::for_checkpoint(ck)?;
    let cfg = &ck.model.config;
    let logits = ck.model.params.layer_logits.to_vec();
    let mut moments: [Option<MapMoments>; 2] = [None, None];
    let mut bin_hz = 0.0;
    for r in selected(manifest, splits) {
        let rep = front.load(&manifest.resolve(r)).map_err(|e| with_context(r, e))?;
        let agg = layer_aggregate(&rep, &logits)?;
        let dynamics = ModulationTransform::new(&cfg.stft, rep.frame_rate_hz())?.forward(agg.view())?;
        bin_hz = dynamics.mod_bin_hz;
        let map = dynamics.time_average();
        moments[r.label as usize]
            .get_or_insert_with(|| MapMoments::new(map.dim()))
            .push(&map)?;
    }
    match moments {
        [Some(neg), Some(pos)] => f_ratio_from_moments(&pos, &neg, bin_hz),
        _ => Err(Error::invalid("F-ratio needs records of both classes")),
    }
}

/// Speaker-identification probe over precomputed embedding rows.
pub fn probe_rows(rows: &[(Record, Array1<f64>)], train_frac: f64, shrinkage: f64, seed: u64) -> Result<ProbeResult> {
    let emb: Vec<Vec<f64>> = rows.iter().map(|(_, e)| e.to_vec()).collect();
    let spk: Vec<String> = rows.iter().map(|(r, _)| r.speaker.clone()).collect();
    speaker_probe(&emb, &spk, train_frac, shrinkage, seed)
}

/// Flatten every record's representation (e.g. extracted embeddings) into
/// one vector per record.
pub fn load_vectors(
    manifest: &DatasetManifest,
    splits: &[Split],
    front: &FrontEnd,
) -> Result<Vec<(Record, Array1<f64>)>> {
    selected(manifest, splits)
        .map(|r| {
            let rep = front.load(&manifest.resolve(r)).map_err(|e| with_context(r, e))?;
            Ok((r.clone(), Array1::from_iter(rep.values().iter().copied())))
        })
        .collect()
}
