//! Error type for the CLI with a stable exit-code mapping per failure family.

use std::path::PathBuf;

use plcembed::corpus::CorpusError;
use plcembed::eval::RobustnessError;
use plcembed::model::{CheckpointError, ModelError};
use plcembed::synthgen::SynthError;
use plcembed::trainer::TrainError;
use thiserror::Error;

/// Everything a subcommand can fail with. Each variant family maps to a
/// distinct process exit code so scripts can tell configuration mistakes from
/// data problems from genuine runtime failures. Exit code 2 is reserved for
/// argument-parsing errors (emitted by the parser itself before we run).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Robustness(#[from] RobustnessError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 3,
            CliError::Corpus(_) => 4,
            CliError::Model(_) => 5,
            CliError::Checkpoint(_) => 6,
            CliError::Train(_) => 7,
            CliError::Robustness(_) => 8,
            CliError::Synth(_) => 9,
            CliError::Io { .. } => 10,
        }
    }
}
