//! Command-line surface. `run_command` parses arguments, runs one
//! subcommand and maps the outcome to an exit code: 0 on success, 1 on a
//! usage error, 2 on a data, format or I/O error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::Array1;

use crate::analysis::{layer_importance, sparsity, DEFAULT_SHRINKAGE, DEFAULT_TRAIN_FRAC, SPARSITY_THRESHOLD};
use crate::encoders::load_wrx1;
use crate::error::{Error, Result};
use crate::io::{parse_manifest, Carrier, Checkpoint, DatasetManifest, Record, RunConfig, Split, SyntheticCorpusSpec};
use crate::pipeline::{self, is_tensor_path};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "wavrx", version, about = "Modulation-dynamics speech health diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train on the manifest's train split, selecting on valid.
    Train(TrainArgs),
    /// AUC and macro F1 of a checkpoint.
    Evaluate(EvaluateArgs),
    /// Write health embeddings as WRX1 files plus a manifest.
    Extract(ExtractArgs),
    /// Interpretability maps and statistics.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Information-leakage probes.
    #[command(subcommand)]
    Probe(ProbeCommand),
    /// Generate the synthetic modulation corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// TOML run configuration; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: PathBuf,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
    /// Line-delimited JSON epoch log.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Reject manifests where a speaker appears in more than one split.
    #[arg(long)]
    strict_speakers: bool,
}

#[derive(Debug, Args)]
struct Source {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    src: Source,
    #[arg(long, value_delimiter = ',', value_parser = parse_split, default_value = "valid,test")]
    splits: Vec<Split>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[command(flatten)]
    src: Source,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', value_parser = parse_split, default_value = "train,valid,test")]
    splits: Vec<Split>,
}

#[derive(Debug, Subcommand)]
enum AnalyzeCommand {
    /// Class F-ratio over feature × modulation frequency.
    Fratio(MapArgs),
    /// Health-embedding sparsity.
    Sparsity(SparsityArgs),
    /// Learned layer weights.
    Layers(LayersArgs),
}

#[derive(Debug, Args)]
struct MapArgs {
    #[command(flatten)]
    src: Source,
    #[arg(long, value_delimiter = ',', value_parser = parse_split, default_value = "train,valid,test")]
    splits: Vec<Split>,
    /// Tab-separated output file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SparsityArgs {
    #[command(flatten)]
    src: Source,
    #[arg(long, value_delimiter = ',', value_parser = parse_split, default_value = "train,valid,test")]
    splits: Vec<Split>,
    /// Relative magnitude threshold.
    #[arg(long, default_value_t = SPARSITY_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LayersArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum ProbeCommand {
    /// Speaker identification accuracy of an LDA probe on embeddings.
    Speaker(ProbeArgs),
}

#[derive(Debug, Args)]
struct ProbeArgs {
    /// Without --ckpt: a manifest of embedding files (as written by
    /// `extract`). With --ckpt: a dataset manifest to embed first.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    ckpt: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = parse_split, default_value = "train,valid,test")]
    splits: Vec<Split>,
    #[arg(long, default_value_t = DEFAULT_TRAIN_FRAC)]
    train_frac: f64,
    #[arg(long, default_value_t = DEFAULT_SHRINKAGE)]
    shrinkage: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory (audio files and manifest.csv).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    n_per_class: usize,
    #[arg(long, default_value_t = 10.0)]
    duration_s: f64,
    #[arg(long, default_value_t = 16000)]
    sample_rate: u32,
    #[arg(long, value_parser = parse_carrier, default_value = "noise")]
    carrier: Carrier,
    #[arg(long, default_value_t = 0.3)]
    mod_freq_hz: f64,
    #[arg(long, default_value_t = 0.5)]
    mod_depth: f64,
    #[arg(long, default_value_t = 3.0)]
    speaker_tilt_db_per_octave: f64,
    #[arg(long, default_value_t = 10)]
    n_speakers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_split(s: &str) -> std::result::Result<Split, String> {
    Split::parse(s).ok_or_else(|| format!("unknown split '{s}' (expected train, valid or test)"))
}

fn parse_carrier(s: &str) -> std::result::Result<Carrier, String> {
    match s {
        "noise" => Ok(Carrier::Noise),
        "sawtooth" => Ok(Carrier::Sawtooth),
        _ => Err(format!("unknown carrier '{s}' (expected noise or sawtooth)")),
    }
}

/// Run with the process's stdout and stderr.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr().lock());
    run_command_with(argv, &mut out, &mut err)
}

/// Run with explicit output streams. `argv[0]` is the program name.
pub fn run_command_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_manifest(path: &Path, strict: bool, err: &mut dyn Write) -> Result<DatasetManifest> {
    let m = parse_manifest(path, false)?;
    for w in m.check_speaker_independence(strict)? {
        let _ = writeln!(err, "warning: {w}");
    }
    Ok(m)
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Train(a) => train(a, out, err),
        Command::Evaluate(a) => {
            let ck = Checkpoint::load(&a.src.ckpt)?;
            let m = load_manifest(&a.src.manifest, false, err)?;
            let mut text = String::from("split\tn\tauc\tf1\n");
            for s in pipeline::evaluate(&ck, &m, &a.splits)? {
                let auc = s.auc.map_or("nan".to_string(), |v| format!("{v:.6}"));
                text += &format!("{}\t{}\t{auc}\t{:.6}\n", s.split, s.n, s.f1);
            }
            emit(out, &text)
        }
        Command::Extract(a) => {
            let ck = Checkpoint::load(&a.src.ckpt)?;
            let m = load_manifest(&a.src.manifest, false, err)?;
            let written = pipeline::extract(&ck, &m, &a.splits, &a.out)?;
            emit(
                out,
                &format!(
                    "wrote {} embeddings to {}\n",
                    written.len(),
                    a.out.join("embeddings.csv").display()
                ),
            )
        }
        Command::Analyze(AnalyzeCommand::Fratio(a)) => {
            let ck = Checkpoint::load(&a.src.ckpt)?;
            let m = load_manifest(&a.src.manifest, false, err)?;
            let map = pipeline::fratio(&ck, &m, &a.splits)?;
            if let Some(p) = &a.out {
                map.write_tsv(p)?;
            }
            let peak = map.argmax();
            emit(
                out,
                &format!(
                    "peak\tfeature={}\tbin={}\tfreq_hz={}\tvalue={:.6}\nsignificant_pixels\t{}\n",
                    peak.feature,
                    peak.bin,
                    peak.freq_hz,
                    peak.value,
                    map.n_significant()
                ),
            )
        }
        Command::Analyze(AnalyzeCommand::Sparsity(a)) => {
            let ck = Checkpoint::load(&a.src.ckpt)?;
            let m = load_manifest(&a.src.manifest, false, err)?;
            let rows = pipeline::embeddings(&ck, &m, &a.splits)?;
            let emb: Vec<Array1<f64>> = rows.into_iter().map(|(_, e)| e).collect();
            let rep = sparsity(&emb, a.threshold)?;
            if let Some(p) = &a.out {
                write_file(p, &rep.to_tsv())?;
            }
            emit(
                out,
                &format!(
                    "sparsity_pct\tmean={:.4}\tstd={:.4}\tn={}\n",
                    rep.mean_pct,
                    rep.std_pct,
                    emb.len()
                ),
            )
        }
        Command::Analyze(AnalyzeCommand::Layers(a)) => {
            let ck = Checkpoint::load(&a.ckpt)?;
            let mut text = String::from("layer\tweight\n");
            for (l, w) in layer_importance(&ck.model.params).iter().enumerate() {
                text += &format!("{l}\t{w:.6}\n");
            }
            if let Some(p) = &a.out {
                write_file(p, &text)?;
            }
            emit(out, &text)
        }
        Command::Probe(ProbeCommand::Speaker(a)) => {
            let m = load_manifest(&a.manifest, false, err)?;
            let rows = match &a.ckpt {
                Some(c) => pipeline::embeddings(&Checkpoint::load(c)?, &m, &a.splits)?,
                None => embedding_rows(&m, &a.splits)?,
            };
            let res = pipeline::probe_rows(&rows, a.train_frac, a.shrinkage, a.seed)?;
            emit(
                out,
                &format!(
                    "speaker_accuracy\t{:.6}\nn_speakers\t{}\nn_train\t{}\nn_test\t{}\n",
                    res.accuracy, res.n_speakers, res.n_train, res.n_test
                ),
            )
        }
        Command::Synth(a) => {
            let spec = SyntheticCorpusSpec {
                n_per_class: a.n_per_class,
                duration_s: a.duration_s,
                sample_rate: a.sample_rate,
                carrier: a.carrier,
                mod_freq_hz: a.mod_freq_hz,
                mod_depth: a.mod_depth,
                speaker_tilt_db_per_octave: a.speaker_tilt_db_per_octave,
                n_speakers: a.n_speakers,
                seed: a.seed,
            };
            let m = crate::io::generate_synthetic(&spec, &a.out)?;
            emit(
                out,
                &format!(
                    "wrote {} utterances to {}\n",
                    m.len(),
                    a.out.join("manifest.csv").display()
                ),
            )
        }
    }
}

fn train(a: TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let m = load_manifest(&a.manifest, a.strict_speakers, err)?;
    let mut lines = String::new();
    let run = pipeline::train_manifest(&m, &cfg, |e| {
        lines.push_str(&e.to_json_line());
        lines.push('\n');
    })?;
    run.checkpoint.save(&a.out)?;
    if let Some(p) = &a.log {
        write_file(p, &lines)?;
    }
    emit(
        out,
        &format!(
            "trained {} epochs, best epoch {}, checkpoint {}\n",
            run.log.len(),
            run.best_epoch,
            a.out.display()
        ),
    )
}

/// Embedding vectors read straight from WRX1 files named in a manifest.
fn embedding_rows(m: &DatasetManifest, splits: &[Split]) -> Result<Vec<(Record, Array1<f64>)>> {
    m.records
        .iter()
        .filter(|r| splits.contains(&r.split))
        .map(|r| {
            let path = m.resolve(r);
            if !is_tensor_path(&path) {
                return Err(Error::invalid(format!(
                    "record {}: {} is not an embedding file; pass --ckpt to embed audio",
                    r.id,
                    path.display()
                )));
            }
            let rep = load_wrx1(&path)?;
            Ok((r.clone(), Array1::from_iter(rep.values().iter().copied())))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run_command_with(std::iter::once("wavrx").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(&[]).0, EXIT_USAGE);
        assert_eq!(run(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run(&["evaluate", "--ckpt", "x"]).0, EXIT_USAGE);
        assert_eq!(
            run(&["evaluate", "--ckpt", "x", "--manifest", "m", "--splits", "dev"]).0,
            EXIT_USAGE
        );
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("train"));
    }

    #[test]
    fn missing_checkpoint_exits_two() {
        let dir = tempfile::tempdir().unwrap();
        let ck = dir.path().join("none.wrxc");
        let (code, _, err) = run(&["evaluate", "--ckpt", ck.to_str().unwrap(), "--manifest", "m.csv"]);
        assert_eq!(code, EXIT_DATA);
        assert!(err.contains("none.wrxc"));
    }
}
