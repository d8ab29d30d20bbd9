//! Mini-batch training with weighted cross-entropy, adaptive-moment updates
//! with decoupled weight decay, and validation-based early stopping.
//!
//! All randomness (parameter init, epoch shuffles, oversampling) derives from
//! [`TrainConfig::seed`], so a run is reproducible bit-for-bit: same data and
//! seed give the same [`TrainReport`] and the same checkpoint bytes.

mod batch;
mod optim;
mod run;

pub use batch::make_batches;
pub use optim::AdamW;
pub use run::{train, TrainOutcome, CHECKPOINT_FILE, TRAINING_LOG_FILE};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::model::{CheckpointError, ModelError};

/// How class imbalance in the training set is handled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImbalanceMode {
    /// Scale each item's loss by its class weight; iteration order untouched.
    Weights,
    /// Duplicate minority-class items until every per-epoch class count is
    /// within a factor of two of the majority.
    Oversample,
    /// Use the set as-is.
    None,
}

impl ImbalanceMode {
    pub fn name(self) -> &'static str {
        match self {
            ImbalanceMode::Weights => "weights",
            ImbalanceMode::Oversample => "oversample",
            ImbalanceMode::None => "none",
        }
    }
}

impl std::str::FromStr for ImbalanceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "weights" => Ok(ImbalanceMode::Weights),
            "oversample" => Ok(ImbalanceMode::Oversample),
            "none" => Ok(ImbalanceMode::None),
            other => Err(format!(
                "unknown imbalance mode '{other}' (expected 'weights', 'oversample', or 'none')"
            )),
        }
    }
}

/// Hyperparameters of one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Stop after this many consecutive epochs without a strict improvement
    /// in validation accuracy.
    pub patience: usize,
    pub imbalance_mode: ImbalanceMode,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 16,
            learning_rate: 1e-3,
            weight_decay: 1e-4,
            patience: 5,
            imbalance_mode: ImbalanceMode::Weights,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 {
            return Err(TrainError::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig(
                "batch_size must be at least 1".into(),
            ));
        }
        if self.patience == 0 || self.patience > self.epochs {
            return Err(TrainError::InvalidConfig(format!(
                "patience must be in 1..={} (epochs), got {}",
                self.epochs, self.patience
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(TrainError::InvalidConfig(format!(
                "learning_rate must be a positive finite number, got {}",
                self.learning_rate
            )));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(TrainError::InvalidConfig(format!(
                "weight_decay must be a non-negative finite number, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

/// One completed epoch as it appears in the log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Mean weighted cross-entropy over the epoch's schedule.
    pub train_loss: f64,
    /// Fraction of validation items predicted correctly.
    pub val_accuracy: f64,
}

/// Everything a run reports besides the weights themselves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// 1-based epoch whose validation accuracy was the run's maximum; 0 only
    /// in a diverged report with no completed epoch.
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub stopped_early: bool,
    pub optimizer_steps: usize,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("the {which} set has no items")]
    EmptyDataset { which: &'static str },
    #[error("label {label} out of range for {k_classes} classes")]
    LabelOutOfRange { label: usize, k_classes: usize },
    #[error("training loss became non-finite in epoch {epoch}; aborted")]
    DivergedLoss {
        epoch: usize,
        report: Box<TrainReport>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("failed writing {path}: {source}")]
    Log {
        path: PathBuf,
        source: std::io::Error,
    },
}
