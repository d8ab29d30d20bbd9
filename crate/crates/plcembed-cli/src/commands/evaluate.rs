//! `plcembed evaluate` — clean and corrupted metrics for a checkpoint on the
//! held-out test split.

use std::path::PathBuf;

use clap::Args;
use plcembed::corpus::{build_raw_items, load_index, split_by_program, Split, SplitRatios, Task};
use plcembed::eval::{render_robustness_table, robustness_csv, robustness_eval};
use plcembed::model::load_checkpoint;

use crate::commands::{ensure_dir, parse_fractions, write_text};
use crate::error::CliError;
use crate::manifest::{write_manifest, RunManifest};

pub const ROBUSTNESS_FILE: &str = "robustness.csv";

#[derive(Args)]
pub struct EvaluateArgs {
    /// Dataset root containing Binary/ and Metadata/index.csv
    #[arg(long)]
    pub dataset: PathBuf,
    /// Checkpoint produced by `plcembed train`
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Classification target: 'toolchain' or 'functionality'
    #[arg(long, default_value = "toolchain")]
    pub task: Task,
    /// Comma-separated byte-corruption fractions
    #[arg(long, default_value = "0.05,0.1")]
    pub fractions: String,
    /// Split/corruption seed; defaults to the training seed stored in the
    /// checkpoint, which re-derives the training-time test split
    #[arg(long)]
    pub seed: Option<u64>,
    /// Optional directory that receives robustness.csv and a run manifest
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: EvaluateArgs) -> Result<(), CliError> {
    let index = load_index(&args.dataset)?;
    let (params, meta) = load_checkpoint::<f32>(&args.checkpoint)?;
    let task = args.task;
    meta.require_classes(task.class_count(&index))?;
    let fractions = parse_fractions(&args.fractions)?;
    let seed = args.seed.unwrap_or(meta.model.seed);

    let assignment = split_by_program(&index, SplitRatios::default(), seed)?;
    let test_set = build_raw_items(&index, &assignment, Split::Test, task)?;
    let table = robustness_eval(&params, &meta.model, &test_set, &fractions, seed)?;

    println!("test items: {}  seed: {seed}", test_set.len());
    print!("{}", render_robustness_table(&table, task.name()));

    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_text(&out.join(ROBUSTNESS_FILE), &robustness_csv(&table, task.name()))?;

        let config_json = serde_json::json!({
            "task": task.name(),
            "fractions": fractions,
            "model": meta.model,
        });
        let mut manifest = RunManifest::new("evaluate", seed, config_json);
        manifest.artifacts.push(ROBUSTNESS_FILE.into());
        write_manifest(&manifest, out)?;
    }
    Ok(())
}
