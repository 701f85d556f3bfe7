//! Action windows around a prior action, the decaying mask probability and
//! the affine map from actor output to the active window.
//!
//! Two different quantities are both commonly called "bias" here. The
//! *half-window* is the distance from the prior action to either edge of the
//! masked window. The *map offset* is the window midpoint added inside
//! [`action_mapping`]. They are kept under separate names throughout.

use thiserror::Error;

use crate::env::EnvSpec;

/// Windows narrower than this are treated as a single point.
pub const DEGENERATE_WIDTH: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum MaskingError {
    #[error("prior action is not finite: {0:?}")]
    NonFinitePrior(Vec<f64>),
    #[error("prior action has {got} dimensions, expected {expected}")]
    PriorDim { expected: usize, got: usize },
    #[error("half-window must be positive, got {0}")]
    HalfWindow(f64),
    #[error("invalid epsilon schedule: masking fraction {fraction} over {total_steps} steps")]
    Schedule { fraction: f64, total_steps: u64 },
}

/// Per-dimension lower and upper action bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ActionBounds {
    /// The whole action space.
    pub fn full(spec: &EnvSpec) -> Self {
        Self { lower: spec.action_low.clone(), upper: spec.action_high.clone() }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, action: &[f64]) -> bool {
        action.len() == self.dim()
            && action
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(a, (lo, hi))| a >= lo && a <= hi)
    }

    /// Clamp `action` into the window.
    pub fn clip(&self, action: &mut [f64]) {
        for (a, (lo, hi)) in action.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *a = a.clamp(*lo, *hi);
        }
    }

    /// Lower bounds followed by upper bounds.
    pub fn concat(&self) -> impl Iterator<Item = f64> + '_ {
        self.lower.iter().chain(&self.upper).copied()
    }
}

/// Linear decay of the masking probability over the first `fraction * total_steps` steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonSchedule {
    fraction: f64,
    total_steps: u64,
}

impl EpsilonSchedule {
    pub fn new(fraction: f64, total_steps: u64) -> Result<Self, MaskingError> {
        let valid = fraction > 0.0 && fraction <= 1.0 && total_steps > 0 && fraction * total_steps as f64 >= 1.0;
        if !valid {
            return Err(MaskingError::Schedule { fraction, total_steps });
        }
        Ok(Self { fraction, total_steps })
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    /// `max(1 - t / (fraction * total_steps), 0)`.
    pub fn epsilon_at(&self, t: u64) -> f64 {
        (1.0 - t as f64 / (self.fraction * self.total_steps as f64)).max(0.0)
    }
}

/// Bounds actually in force for one environment step.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskDecision {
    pub masked: bool,
    pub bounds: ActionBounds,
}

impl MaskDecision {
    pub fn unmasked(spec: &EnvSpec) -> Self {
        Self { masked: false, bounds: ActionBounds::full(spec) }
    }
}

/// Window of half-width `half_window` around `prior_action`, clipped to the action space.
pub fn compute_bounds(prior_action: &[f64], half_window: f64, spec: &EnvSpec) -> Result<ActionBounds, MaskingError> {
    if !(half_window > 0.0) {
        return Err(MaskingError::HalfWindow(half_window));
    }
    if prior_action.len() != spec.act_dim {
        return Err(MaskingError::PriorDim { expected: spec.act_dim, got: prior_action.len() });
    }
    if prior_action.iter().any(|a| !a.is_finite()) {
        return Err(MaskingError::NonFinitePrior(prior_action.to_vec()));
    }
    let (lower, upper) = prior_action
        .iter()
        .zip(spec.action_low.iter().zip(&spec.action_high))
        .map(|(&p, (&lo, &hi))| {
            let p = p.clamp(lo, hi);
            ((p - half_window).clamp(lo, hi), (p + half_window).clamp(lo, hi))
        })
        .unzip();
    Ok(ActionBounds { lower, upper })
}

/// Keep `bounds` when `uniform_draw < epsilon`, otherwise release the whole action space.
///
/// One draw decides for the entire action vector.
pub fn apply_epsilon_masking(bounds: ActionBounds, epsilon: f64, uniform_draw: f64, spec: &EnvSpec) -> MaskDecision {
    if uniform_draw < epsilon {
        MaskDecision { masked: true, bounds }
    } else {
        MaskDecision::unmasked(spec)
    }
}

/// Affine map of `x` in `[-1, 1]` onto `[lower, upper]`.
pub fn action_mapping(x: &[f64], bounds: &ActionBounds) -> Vec<f64> {
    x.iter()
        .zip(bounds.lower.iter().zip(&bounds.upper))
        .map(|(&x, (&lo, &hi))| map_scalar(x, lo, hi))
        .collect()
}

#[inline]
pub(crate) fn map_scalar(x: f64, lo: f64, hi: f64) -> f64 {
    if hi - lo < DEGENERATE_WIDTH {
        return 0.5 * (hi + lo);
    }
    // the affine form can miss an endpoint by one ulp, so pin both
    if x <= -1.0 {
        return lo;
    }
    if x >= 1.0 {
        return hi;
    }
    let scale = (hi - lo) / 2.0;
    let map_offset = (hi + lo) / 2.0;
    (x * scale + map_offset).clamp(lo, hi)
}

#[inline]
pub(crate) fn jacobian_scalar(lo: f64, hi: f64) -> f64 {
    if hi - lo < DEGENERATE_WIDTH {
        0.0
    } else {
        (hi - lo) / 2.0
    }
}

/// Diagonal of d(action_mapping)/dx, constant in `x`.
pub fn action_mapping_jacobian(bounds: &ActionBounds) -> Vec<f64> {
    bounds.lower.iter().zip(&bounds.upper).map(|(&lo, &hi)| jacobian_scalar(lo, hi)).collect()
}
