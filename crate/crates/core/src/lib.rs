//! Masking-aware TD3 with epsilon-decayed continuous action masking.
//!
//! A prior policy proposes an action for every state. The learner's action is
//! confined to a window of half-width `half_window` around that proposal, the
//! window is applied with a probability that decays linearly to zero, and the
//! actor can be made aware of the active window by receiving its bounds as
//! part of its input.
//!
//! The crate is organised bottom-up:
//!
//! - [`env`]: small deterministic continuous-control environments.
//! - [`nn`]: dense networks with exact reverse-mode gradients, Adam, Polyak.
//! - [`masking`]: bounds generation, the epsilon schedule and the action map.
//! - [`agent`]: replay buffer and the masked TD3 learner.
//! - [`priors`]: scripted priors, the subprocess bridge and candidate scoring.
//! - [`harness`]: the training loop, evaluation, ablation arms and curve
//!   aggregation behind the `camel` command-line tool.

pub mod agent;
pub mod env;
pub mod harness;
pub mod masking;
pub mod nn;
pub mod priors;
pub mod rng;

pub use agent::{Agent, AgentConfig, ReplayBuffer, Transition};
pub use env::{Env, EnvKind, EnvSpec, Observation, StepResult};
pub use masking::{ActionBounds, EpsilonSchedule, MaskDecision};
pub use nn::{Activation, Adam, Mlp};
pub use priors::PriorPolicy;
