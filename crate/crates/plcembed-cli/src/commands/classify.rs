//! `plcembed classify` — run a checkpoint over individual binaries and print
//! the predicted class with the full probability vector.

use std::path::PathBuf;

use clap::Args;
use plcembed::corpus::{encode_sequence, read_bytes};
use plcembed::model::{load_checkpoint, predict};

use crate::commands::{ensure_dir, write_text};
use crate::error::CliError;
use crate::manifest::{write_manifest, RunManifest};

pub const PREDICTIONS_FILE: &str = "predictions.csv";

#[derive(Args)]
pub struct ClassifyArgs {
    /// Checkpoint produced by `plcembed train`
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Binary files to classify
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Optional directory that receives predictions.csv and a run manifest
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: ClassifyArgs) -> Result<(), CliError> {
    let (params, meta) = load_checkpoint::<f32>(&args.checkpoint)?;
    let cfg = &meta.model;

    let mut csv = String::from("file,predicted_class,predicted_name");
    for name in &meta.class_names {
        csv.push_str(&format!(",p_{name}"));
    }
    csv.push('\n');

    for file in &args.files {
        let raw = read_bytes(file)?;
        let encoded = encode_sequence(&raw, cfg.l_max)?;
        let pred = predict(&params, cfg, &encoded)?;
        let label = &meta.class_names[pred.predicted_class];

        let probs: Vec<String> = meta
            .class_names
            .iter()
            .zip(&pred.probs)
            .map(|(name, p)| format!("{name}={p:.4}"))
            .collect();
        println!("{}  {}  [{}]", file.display(), label, probs.join(" "));

        csv.push_str(&format!(
            "{},{},{}",
            file.display(),
            pred.predicted_class,
            label
        ));
        for p in &pred.probs {
            csv.push_str(&format!(",{p}"));
        }
        csv.push('\n');
    }

    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_text(&out.join(PREDICTIONS_FILE), &csv)?;

        let config_json = serde_json::json!({ "model": meta.model });
        let mut manifest = RunManifest::new("classify", meta.model.seed, config_json);
        manifest.artifacts.push(PREDICTIONS_FILE.into());
        write_manifest(&manifest, out)?;
    }
    Ok(())
}
