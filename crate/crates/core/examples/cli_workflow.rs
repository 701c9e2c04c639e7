//! The command-line workflow driven in-process: generate a small corpus,
//! train, evaluate, analyze, extract embeddings and probe them.
//!
//! cargo run --release --example cli_workflow [work_dir]

use std::path::PathBuf;

use wavrx::cli::run_command;

fn main() {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("wavrx_cli"));
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    std::fs::create_dir_all(&dir).expect("work dir");
    std::fs::write(dir.join("run.toml"), "branches = \"dynamics\"\nepochs = 10\n").expect("config");
    let manifest = p("corpus/manifest.csv");
    let steps: Vec<Vec<String>> = vec![
        vec![
            "synth".into(),
            "--out".into(),
            p("corpus"),
            "--n-per-class".into(),
            "20".into(),
            "--duration-s".into(),
            "6".into(),
        ],
        vec![
            "train".into(),
            "--config".into(),
            p("run.toml"),
            "--manifest".into(),
            manifest.clone(),
            "--out".into(),
            p("model.wrxc"),
            "--log".into(),
            p("train.jsonl"),
        ],
        vec![
            "evaluate".into(),
            "--ckpt".into(),
            p("model.wrxc"),
            "--manifest".into(),
            manifest.clone(),
        ],
        vec![
            "analyze".into(),
            "fratio".into(),
            "--ckpt".into(),
            p("model.wrxc"),
            "--manifest".into(),
            manifest.clone(),
            "--out".into(),
            p("fratio.tsv"),
        ],
        vec![
            "analyze".into(),
            "sparsity".into(),
            "--ckpt".into(),
            p("model.wrxc"),
            "--manifest".into(),
            manifest.clone(),
        ],
        vec!["analyze".into(), "layers".into(), "--ckpt".into(), p("model.wrxc")],
        vec![
            "extract".into(),
            "--ckpt".into(),
            p("model.wrxc"),
            "--manifest".into(),
            manifest.clone(),
            "--out".into(),
            p("embeddings"),
        ],
        vec![
            "probe".into(),
            "speaker".into(),
            "--manifest".into(),
            p("embeddings/embeddings.csv"),
        ],
    ];
    for args in steps {
        println!("$ wavrx {}", args.join(" "));
        let code = run_command(std::iter::once("wavrx".to_string()).chain(args));
        if code != 0 {
            std::process::exit(code);
        }
    }
}
