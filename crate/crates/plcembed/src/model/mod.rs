//! Model assembly: configuration, parameters, the forward/backward pipeline
//! for both variants, and checkpoint serialization.

mod checkpoint;
mod config;
mod forward;
mod params;

pub use checkpoint::{
    load_checkpoint, read_meta, save_checkpoint, CheckpointError, CheckpointMeta,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use config::{ConvConfig, EncoderConfig, ModelConfig, Positional, Variant};
pub use forward::{backward, forward_loss, positional_encoding, predict, ForwardTrace, Prediction};
pub use params::{init_params, EncoderLayerParams, ModelParams};

use crate::ndops::OpError;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("sequence length {found} does not match configured maximum {expected}")]
    SequenceLength { expected: usize, found: usize },
    #[error(transparent)]
    Op(#[from] OpError),
}
