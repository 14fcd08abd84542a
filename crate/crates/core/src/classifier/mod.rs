//! Per-block neural classifier: network, optimizer, training loop and
//! checkpoint format.

pub mod adam;
pub mod checkpoint;
pub mod fit;
pub mod network;

use thiserror::Error;

pub use adam::{adam_step, AdamConfig};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CheckpointError};
pub use fit::{argmax, fit, Dataset, EpochDecision, EpochRecord, FitConfig, FitOutcome, TrainSource, TrainState, Validator};
pub use network::{
    forward, init_model, loss, Activation, CheckpointMeta, Dense, DenseGrad, Gradients, HiddenSpec, Mode, ModelParams,
    LOSS_EPSILON,
};

use crate::embedding::EmbeddingError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("a classifier needs at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("{what} dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { what: &'static str, expected: usize, got: usize },
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("no training samples")]
    EmptyTrainingSet,
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}
