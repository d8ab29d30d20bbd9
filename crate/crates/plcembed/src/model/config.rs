//! Model hyperparameters. Defaults target full-length binaries; the
//! desk-scale synthetic runs shrink `l_max` and `d` via the CLI.

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Which architecture to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Embedding → conv → transformer encoder → pooled head.
    CnnTransformer,
    /// Same pipeline with the encoder removed; the controlled baseline.
    CnnOnly,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::CnnTransformer => "cnn_transformer",
            Variant::CnnOnly => "cnn_only",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cnn_transformer" => Ok(Variant::CnnTransformer),
            "cnn_only" => Ok(Variant::CnnOnly),
            other => Err(format!(
                "unknown variant '{other}' (expected 'cnn_transformer' or 'cnn_only')"
            )),
        }
    }
}

/// Positional information injected before the encoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Positional {
    Sinusoidal,
    None,
}

impl std::str::FromStr for Positional {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sinusoidal" => Ok(Positional::Sinusoidal),
            "none" => Ok(Positional::None),
            other => Err(format!(
                "unknown positional mode '{other}' (expected 'sinusoidal' or 'none')"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvConfig {
    pub k: usize,
    pub stride: usize,
    pub d_out: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub layers: usize,
    pub heads: usize,
    pub ffn_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    pub l_max: usize,
    /// Byte-embedding width.
    pub d: usize,
    pub conv: ConvConfig,
    /// Ignored when `variant` is `CnnOnly`.
    pub encoder: EncoderConfig,
    pub k_classes: usize,
    pub positional: Positional,
    pub seed: u64,
}

impl Default for ModelConfig {
    /// Full-scale defaults: 64 KiB window, d=256, conv 16/8 (an 8× sequence
    /// reduction keeps encoder cost tractable), 2 encoder layers of 4 heads.
    fn default() -> Self {
        ModelConfig {
            variant: Variant::CnnTransformer,
            l_max: 65_536,
            d: 256,
            conv: ConvConfig {
                k: 16,
                stride: 8,
                d_out: 256,
            },
            encoder: EncoderConfig {
                layers: 2,
                heads: 4,
                ffn_dim: 1024,
            },
            k_classes: 4,
            positional: Positional::Sinusoidal,
            seed: 0,
        }
    }
}

impl ModelConfig {
    /// Default architecture resized to an embedding width: conv keeps the
    /// default window, `d_out = d`, `ffn_dim = 4·d`.
    pub fn sized(variant: Variant, d: usize, k_classes: usize, seed: u64) -> Self {
        ModelConfig {
            variant,
            d,
            conv: ConvConfig {
                k: 16,
                stride: 8,
                d_out: d,
            },
            encoder: EncoderConfig {
                layers: 2,
                heads: 4,
                ffn_dim: 4 * d,
            },
            k_classes,
            seed,
            ..ModelConfig::default()
        }
    }

    /// Conv output length M for this config.
    pub fn conv_len(&self) -> usize {
        crate::ndops::conv::conv_output_len(self.l_max, self.conv.k, self.conv.stride)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.d == 0 || self.conv.d_out == 0 {
            return fail("embedding and conv output dims must be positive".into());
        }
        if self.k_classes < 2 {
            return fail(format!("need at least 2 classes, got {}", self.k_classes));
        }
        if self.conv.stride == 0 {
            return fail("conv stride must be >= 1".into());
        }
        if self.conv.k == 0 || self.l_max < self.conv.k {
            return fail(format!(
                "sequence window {} shorter than conv kernel {}",
                self.l_max, self.conv.k
            ));
        }
        if self.variant == Variant::CnnTransformer {
            if self.encoder.layers == 0 || self.encoder.heads == 0 || self.encoder.ffn_dim == 0 {
                return fail("encoder layers, heads, and ffn_dim must be positive".into());
            }
            if self.conv.d_out % self.encoder.heads != 0 {
                return fail(format!(
                    "width {} not divisible by {} heads",
                    self.conv.d_out, self.encoder.heads
                ));
            }
        }
        Ok(())
    }
}
