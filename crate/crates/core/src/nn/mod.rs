//! Dense networks with exact reverse-mode gradients.
//!
//! Only what TD3 needs: a ReLU multilayer perceptron with a `tanh` or identity
//! head, backward passes that also return the gradient with respect to the
//! network input, Adam, Polyak averaging and a text checkpoint format.

mod adam;
mod checkpoint;
mod mlp;

use thiserror::Error;

pub use adam::{Adam, AdamConfig};
pub use mlp::{Activation, Cache, Dense, Gradients, Mlp};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("input has {got} columns, network expects {expected}")]
    InputShape { expected: usize, got: usize },
    #[error("output gradient has shape {got:?}, expected {expected:?}")]
    GradShape { expected: (usize, usize), got: (usize, usize) },
    #[error("cache was produced by a different version of the parameters")]
    StaleCache,
    #[error("parameter shapes do not match")]
    ParamShape,
    #[error("polyak rate {0} outside [0, 1]")]
    Tau(f64),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
