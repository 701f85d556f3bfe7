//! Replay buffer and the masked TD3 learner.

mod buffer;
mod config;
mod td3;

use thiserror::Error;

pub use buffer::{Batch, ReplayBuffer, Transition};
pub use config::AgentConfig;
pub use td3::{actor_input, Agent, TrainMetrics};

use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("replay buffer holds {size} transitions, need at least {needed}")]
    Underfilled { size: usize, needed: usize },
    #[error("invalid agent configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
