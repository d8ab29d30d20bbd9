//! Optional JSON configuration file.
//!
//! Every field is optional; values present in the file override the built-in
//! defaults, and command-line flags override the file in turn. Unknown keys
//! are rejected so typos fail loudly instead of being silently ignored.

use std::fs;
use std::path::Path;

use plcembed::model::{ModelConfig, Positional, Variant};
use plcembed::synthgen::GeneratorConfig;
use plcembed::trainer::{ImbalanceMode, TrainConfig};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub model: PartialModel,
    pub train: PartialTrain,
    pub generator: PartialGenerator,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartialModel {
    pub variant: Option<Variant>,
    pub l_max: Option<usize>,
    pub d: Option<usize>,
    pub conv: PartialConv,
    pub encoder: PartialEncoder,
    pub positional: Option<Positional>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartialConv {
    pub k: Option<usize>,
    pub stride: Option<usize>,
    pub d_out: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartialEncoder {
    pub layers: Option<usize>,
    pub heads: Option<usize>,
    pub ffn_dim: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartialTrain {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub weight_decay: Option<f64>,
    pub patience: Option<usize>,
    pub imbalance_mode: Option<ImbalanceMode>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartialGenerator {
    pub programs_per_dialect: Option<usize>,
    pub categories: Option<usize>,
    pub length_range: Option<(usize, usize)>,
    pub payload_overlap: Option<f64>,
    pub banded_fingerprints: Option<bool>,
    pub seed: Option<u64>,
}

fn set<T: Copy>(target: &mut T, value: &Option<T>) {
    if let Some(v) = value {
        *target = *v;
    }
}

impl PartialModel {
    /// The class count is dictated by the task, never by the file, so there
    /// is no `k_classes` field to apply.
    pub fn apply(&self, cfg: &mut ModelConfig) {
        set(&mut cfg.variant, &self.variant);
        set(&mut cfg.l_max, &self.l_max);
        set(&mut cfg.d, &self.d);
        set(&mut cfg.conv.k, &self.conv.k);
        set(&mut cfg.conv.stride, &self.conv.stride);
        set(&mut cfg.conv.d_out, &self.conv.d_out);
        set(&mut cfg.encoder.layers, &self.encoder.layers);
        set(&mut cfg.encoder.heads, &self.encoder.heads);
        set(&mut cfg.encoder.ffn_dim, &self.encoder.ffn_dim);
        set(&mut cfg.positional, &self.positional);
        set(&mut cfg.seed, &self.seed);
    }
}

impl PartialTrain {
    pub fn apply(&self, cfg: &mut TrainConfig) {
        set(&mut cfg.epochs, &self.epochs);
        set(&mut cfg.batch_size, &self.batch_size);
        set(&mut cfg.learning_rate, &self.learning_rate);
        set(&mut cfg.weight_decay, &self.weight_decay);
        set(&mut cfg.patience, &self.patience);
        set(&mut cfg.imbalance_mode, &self.imbalance_mode);
        set(&mut cfg.seed, &self.seed);
    }
}

impl PartialGenerator {
    pub fn apply(&self, cfg: &mut GeneratorConfig) {
        set(&mut cfg.programs_per_dialect, &self.programs_per_dialect);
        set(&mut cfg.categories, &self.categories);
        set(&mut cfg.length_range, &self.length_range);
        set(&mut cfg.payload_overlap, &self.payload_overlap);
        set(&mut cfg.banded_fingerprints, &self.banded_fingerprints);
        set(&mut cfg.seed, &self.seed);
    }
}

/// Parse the config file if one was given; absent file flag means all
/// defaults. Read or parse failures are configuration errors.
pub fn load_file_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
