//! Recurrent PPO with GAE: separate actor and critic networks, whole-episode
//! minibatches and full backpropagation through time.

mod config;
mod optim;
mod rollout;
mod train;
mod update;

pub use config::PpoConfig;
pub use optim::{clip_grad_norm, cosine_lr, Adam};
pub use rollout::{collect_rollouts, compute_gae, normalize_advantages, Episode, RolloutBuffer};
pub use train::{IterationMetrics, Trainer, TrainerRngs, METRICS_HEADER};
pub use update::{ppo_update, UpdateStats};

use thiserror::Error;

use crate::cells::CellError;
use crate::envs::EnvError;
use crate::numerics::NumericsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PpoError {
    #[error("invalid PPO configuration: {0}")]
    BadConfig(String),
    #[error("environment failed in episode {episode}: {source}")]
    Env { episode: usize, source: EnvError },
    #[error("empty rollout buffer")]
    EmptyBuffer,
    #[error("non-finite loss at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
