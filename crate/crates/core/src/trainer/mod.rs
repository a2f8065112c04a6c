//! The training loop: rollouts, per-objective sequences, stopping, checkpoints and evaluation.

mod config;
mod evaluate;
mod reference;
mod rollout;
mod run;
mod sequence;
mod state;

use thiserror::Error;

use crate::actor::ActorError;
use crate::autodiff::{CheckpointError, TensorError};
use crate::critic::CriticError;
use crate::geometry::GeometryError;

pub use config::{ConfigError, EnvConfig, EnvKind, TrainConfig};
pub use evaluate::{evaluate, evaluate_checkpoint, EvalTable};
pub use reference::ReferencePpo;
pub use rollout::{EnvPool, EpisodeReturn, RolloutBatch, StepRecord};
pub use run::{train, BatchOutcome, RunSummary, Trainer, CHECKPOINT_FILE, METRICS_FILE, SUMMARY_FILE};
pub use sequence::{run_sequence, Learner, SequenceReport};
pub use state::{load_checkpoint, save_checkpoint, TrainerCheckpoint};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("environment fault: {0}")]
    Env(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Actor(#[from] ActorError),
    #[error(transparent)]
    Critic(#[from] CriticError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<ConfigError> for TrainError {
    fn from(e: ConfigError) -> Self {
        TrainError::Config(e.to_string())
    }
}
