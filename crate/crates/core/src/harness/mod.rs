//! Experiment orchestration: the training loop, unmasked evaluation,
//! ablation arms, record files and cross-seed aggregation.

mod aggregate;
mod config;
mod record;
mod run;

use thiserror::Error;

pub use aggregate::{aggregate, rolling_mean, write_csv, AggregateCurve};
pub use config::{Arm, RunConfig, OUT_ENV};
pub use record::{read_record, write_record, RecordRow, RowKind, RunRecord};
pub use run::{eval_seeds, evaluate, evaluate_episodes, run, run_with_prior, train, train_into, RunOutcome};

use crate::agent::AgentError;
use crate::env::EnvError;
use crate::masking::MaskingError;
use crate::priors::PriorError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Prior(#[from] PriorError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Masking(#[from] MaskingError),
    #[error("evaluation grids differ across records: {0}")]
    Misaligned(String),
    #[error("record {path}: {reason}")]
    Record { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
