use serde::{Deserialize, Serialize};

use super::AgentError;

/// Learner hyperparameters plus the masking switches of one ablation arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub gamma: f64,
    pub tau: f64,
    pub policy_delay: u64,
    /// Exploration noise, in action units, added after mapping.
    pub explore_sigma: f64,
    pub target_sigma: f64,
    pub noise_clip: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub learning_starts: u64,
    /// Half-width of the masked window around the prior action.
    pub half_window: f64,
    pub masking_fraction: f64,
    /// Feed the active bounds to the actor.
    pub masking_aware: bool,
    /// Decay the masking probability; when false every step is masked.
    pub epsilon_masking: bool,
    pub hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            policy_delay: 2,
            explore_sigma: 0.1,
            target_sigma: 0.2,
            noise_clip: 0.5,
            batch_size: 128,
            buffer_capacity: 100_000,
            learning_starts: 1000,
            half_window: 0.3,
            masking_fraction: 0.2,
            masking_aware: true,
            epsilon_masking: true,
            hidden: vec![64, 64],
            actor_lr: 3e-4,
            critic_lr: 3e-4,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let fail = |msg: &str| Err(AgentError::Config(msg.to_string()));
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return fail("gamma must lie in [0, 1)");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return fail("tau must lie in (0, 1]");
        }
        if self.policy_delay < 1 {
            return fail("policy_delay must be at least 1");
        }
        if !(self.noise_clip > 0.0) || !(self.target_sigma > 0.0) {
            return fail("target_sigma and noise_clip must be positive");
        }
        if !(self.explore_sigma >= 0.0) {
            return fail("explore_sigma must be non-negative");
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return fail("buffer_capacity must be at least batch_size > 0");
        }
        if (self.buffer_capacity as u64) < self.learning_starts {
            return fail("buffer_capacity must be at least learning_starts");
        }
        if !(self.half_window > 0.0) {
            return fail("half_window must be positive");
        }
        if !(self.masking_fraction > 0.0 && self.masking_fraction <= 1.0) {
            return fail("masking_fraction must lie in (0, 1]");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return fail("hidden layer sizes must be positive");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return fail("learning rates must be positive");
        }
        Ok(())
    }
}
