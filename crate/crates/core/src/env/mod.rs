//! Deterministic, seedable continuous-control environments.
//!
//! Both environments take actions in `[-1, 1]` per dimension and report
//! time-limit truncation separately from MDP termination.

pub mod pendulum;
pub mod reacher;

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use pendulum::{wrap_angle, Pendulum};
pub use reacher::Reacher;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("step called before reset")]
    NotReset,
    #[error("step called after the episode ended; call reset first")]
    EpisodeOver,
    #[error("action has {got} dimensions, expected {expected}")]
    ActionDim { expected: usize, got: usize },
    #[error("unknown environment `{0}` (expected `pendulum` or `reacher`)")]
    UnknownEnv(String),
}

/// Dimensions and action bounds of an environment.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvSpec {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub max_episode_steps: usize,
}

impl EnvSpec {
    pub(crate) fn symmetric(obs_dim: usize, act_dim: usize, max_episode_steps: usize) -> Self {
        Self {
            obs_dim,
            act_dim,
            action_low: vec![-1.0; act_dim],
            action_high: vec![1.0; act_dim],
            max_episode_steps,
        }
    }

    /// Clamp `action` into the action space.
    pub fn clip(&self, action: &mut [f64]) {
        for ((a, lo), hi) in action.iter_mut().zip(&self.action_low).zip(&self.action_high) {
            *a = a.clamp(*lo, *hi);
        }
    }

    pub fn contains(&self, action: &[f64]) -> bool {
        action.len() == self.act_dim
            && action
                .iter()
                .zip(&self.action_low)
                .zip(&self.action_high)
                .all(|((a, lo), hi)| a >= lo && a <= hi)
    }
}

/// An observation vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for Observation {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Observation {
    fn from(values: Vec<f64>) -> Self {
        Observation(values)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub next_obs: Observation,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

pub trait Env: Send {
    fn spec(&self) -> &EnvSpec;

    /// Start a new episode. The initial state depends only on `seed`.
    fn reset(&mut self, seed: u64) -> Observation;

    /// Advance one control interval. The caller clips `action` into the
    /// action space first.
    fn step(&mut self, action: &[f64]) -> Result<StepResult, EnvError>;
}

/// The environments that can be built by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Pendulum,
    Reacher,
}

impl EnvKind {
    pub fn make(self) -> Box<dyn Env> {
        match self {
            EnvKind::Pendulum => Box::new(Pendulum::new()),
            EnvKind::Reacher => Box::new(Reacher::new()),
        }
    }

    pub fn spec(self) -> EnvSpec {
        match self {
            EnvKind::Pendulum => Pendulum::env_spec(),
            EnvKind::Reacher => Reacher::env_spec(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Pendulum => "pendulum",
            EnvKind::Reacher => "reacher",
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pendulum" => Ok(EnvKind::Pendulum),
            "reacher" => Ok(EnvKind::Reacher),
            _ => Err(EnvError::UnknownEnv(s.to_string())),
        }
    }
}

/// Tracks the episode lifecycle shared by both environments.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub(crate) enum Phase {
    #[default]
    Fresh,
    Running,
    Done,
}

impl Phase {
    pub(crate) fn check(self) -> Result<(), EnvError> {
        match self {
            Phase::Fresh => Err(EnvError::NotReset),
            Phase::Running => Ok(()),
            Phase::Done => Err(EnvError::EpisodeOver),
        }
    }
}
