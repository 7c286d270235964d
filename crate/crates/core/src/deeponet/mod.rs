//! Multi-input DeepONet: nine branch networks, seven trunk networks and a
//! self-adaptively weighted loss.

mod arch;
mod checkpoint;
mod gradcheck;
mod loss;
mod model;

pub use arch::{ArchSpec, BRANCH_INPUTS, N_BRANCHES, N_TRUNKS, TABLE1_PARAMS};
pub use checkpoint::{
    checkpoint_path, latest_checkpoint, list_checkpoints, prune_checkpoints, Checkpoint, ModelAdam, TrainingMeta,
    CHECKPOINT_VERSION,
};
pub use gradcheck::{gradient_check, GradCheck, GRADCHECK_FLOOR};
pub use loss::{loss, LossKind, LossOutput, SaWeights, SA_CLIP, SA_RATE};
pub use model::{target_tensor, trunk_grid, BranchInputs, DeepOnet, ForwardTape, ModelGrads};

use std::path::PathBuf;

use thiserror::Error;

use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint format version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },
    #[error("checkpoint is truncated")]
    Truncated,
    #[error("checkpoint checksum mismatch")]
    Checksum,
    #[error("{network}, layer {layer}: non-finite parameter")]
    NonFinite { network: String, layer: usize },
    #[error("{network}: unknown activation `{name}`")]
    UnknownActivation { network: String, name: String },
    #[error("malformed checkpoint: {0}")]
    Corrupt(String),
    #[error("no checkpoint at {0}")]
    Missing(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}
