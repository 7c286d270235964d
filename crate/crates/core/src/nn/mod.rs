//! Minimal dense feed-forward networks with exact reverse-mode gradients,
//! inverted dropout and Adam.

mod activation;
mod adam;
mod fragment;
mod mlp;

pub use activation::{sigmoid, Activation};
pub use adam::{adam_update, AdamState, LrSchedule, BETA1, BETA2, EPSILON};
pub use fragment::{BufferFragment, MlpFragment, FRAGMENT_VERSION};
pub use mlp::{Dense, Mlp, MlpGrads, MlpSpec, Mode, Tape};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("layer {layer}: expected width {expected}, found {found}")]
    Shape { layer: usize, expected: usize, found: usize },
    #[error("tape recorded at parameter version {tape}, network is at {net}")]
    StaleTape { tape: u64, net: u64 },
    #[error("non-finite gradient; optimizer step aborted")]
    NonFiniteGradient,
    #[error("layer {layer} holds a non-finite parameter")]
    NonFinite { layer: usize },
    #[error("unknown activation `{0}`")]
    UnknownActivation(String),
    #[error("fragment format version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },
    #[error("configuration error: {0}")]
    Config(String),
}
