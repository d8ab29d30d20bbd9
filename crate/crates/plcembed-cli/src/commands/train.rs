//! `plcembed train` — fit a classifier on the train split, select the best
//! epoch on validation, and save checkpoint + log + manifest.

use std::path::PathBuf;

use clap::Args;
use plcembed::corpus::{
    build_items, class_names, load_index, split_by_program, Split, SplitRatios, Task,
};
use plcembed::model::{ModelConfig, Variant};
use plcembed::trainer::{self, ImbalanceMode, TrainConfig, CHECKPOINT_FILE, TRAINING_LOG_FILE};

use crate::commands::ensure_dir;
use crate::config::load_file_config;
use crate::error::CliError;
use crate::manifest::{write_manifest, RunManifest};

#[derive(Args)]
pub struct TrainArgs {
    /// Dataset root containing Binary/ and Metadata/index.csv
    #[arg(long)]
    pub dataset: PathBuf,
    /// Classification target: 'toolchain' or 'functionality'
    #[arg(long, default_value = "toolchain")]
    pub task: Task,
    /// JSON configuration file; its `model` and `train` sections apply here
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory that receives checkpoint, training log, and manifest
    #[arg(long)]
    pub out: PathBuf,
    /// Training seed; also derives the train/validation/test split
    #[arg(long)]
    pub seed: Option<u64>,
    /// Architecture: 'cnn_transformer' or 'cnn_only'
    #[arg(long)]
    pub variant: Option<Variant>,
    /// Maximum input length in bytes; longer binaries are truncated
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Learning rate
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Epochs without validation improvement before stopping
    #[arg(long)]
    pub patience: Option<usize>,
    /// Class-imbalance handling: 'weights', 'oversample', or 'none'
    #[arg(long)]
    pub imbalance: Option<ImbalanceMode>,
}

pub fn run(args: TrainArgs) -> Result<(), CliError> {
    let file = load_file_config(args.config.as_deref())?;
    let index = load_index(&args.dataset)?;
    let task = args.task;
    let names = class_names(&index, task);

    let mut mcfg = ModelConfig::default();
    file.model.apply(&mut mcfg);
    if let Some(v) = args.variant {
        mcfg.variant = v;
    }
    if let Some(v) = args.max_len {
        mcfg.l_max = v;
    }
    mcfg.k_classes = task.class_count(&index);

    let mut tcfg = TrainConfig::default();
    file.train.apply(&mut tcfg);
    if let Some(v) = args.epochs {
        tcfg.epochs = v;
    }
    if let Some(v) = args.batch_size {
        tcfg.batch_size = v;
    }
    if let Some(v) = args.lr {
        tcfg.learning_rate = v;
    }
    if let Some(v) = args.weight_decay {
        tcfg.weight_decay = v;
    }
    if let Some(v) = args.patience {
        tcfg.patience = v;
    }
    if let Some(v) = args.imbalance {
        tcfg.imbalance_mode = v;
    }
    if let Some(v) = args.seed {
        tcfg.seed = v;
    }

    let assignment = split_by_program(&index, SplitRatios::default(), tcfg.seed)?;
    let train_set = build_items(&index, &assignment, Split::Train, task, mcfg.l_max)?;
    let val_set = build_items(&index, &assignment, Split::Validation, task, mcfg.l_max)?;

    ensure_dir(&args.out)?;
    println!(
        "task: {}  classes: {}  train items: {}  validation items: {}",
        task.name(),
        mcfg.k_classes,
        train_set.len(),
        val_set.len()
    );
    let outcome = trainer::train::<f32>(&mcfg, &train_set, &val_set, &names, &tcfg, Some(&args.out))?;
    let report = &outcome.report;
    for stats in &report.epochs {
        println!(
            "epoch {:>3}  train_loss {:>10.6}  val_acc {:>7.4}",
            stats.epoch, stats.train_loss, stats.val_accuracy
        );
    }
    println!(
        "best epoch: {}  best val accuracy: {:.4}  optimizer steps: {}{}",
        report.best_epoch,
        report.best_val_accuracy,
        report.optimizer_steps,
        if report.stopped_early {
            "  (stopped early)"
        } else {
            ""
        }
    );
    println!("checkpoint: {}", args.out.join(CHECKPOINT_FILE).display());

    let config_json = serde_json::json!({
        "task": task.name(),
        "model": outcome.cfg,
        "train": tcfg,
    });
    let mut manifest = RunManifest::new("train", tcfg.seed, config_json);
    manifest.artifacts.push(CHECKPOINT_FILE.into());
    manifest.artifacts.push(TRAINING_LOG_FILE.into());
    write_manifest(&manifest, &args.out)?;
    Ok(())
}
