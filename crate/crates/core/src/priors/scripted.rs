//! Hard-coded controllers.

use crate::env::pendulum::{GRAVITY, LENGTH, TORQUE_SCALE};
use crate::env::wrap_angle;

/// Energy-pumping gain.
const SWING_GAIN: f64 = 1.0;
const CATCH_KP: f64 = 8.0;
const CATCH_KD: f64 = 2.0;
/// Switch to the PD catch once `cos(theta)` exceeds this.
const CATCH_COS: f64 = 0.95;

fn pendulum_angle(obs: &[f64]) -> (f64, f64) {
    (obs[1].atan2(obs[0]), obs[2])
}

fn pd_torque(theta: f64, theta_dot: f64) -> f64 {
    -CATCH_KP * wrap_angle(theta) - CATCH_KD * theta_dot
}

/// Swing-up by energy shaping, then a PD catch near the top.
///
/// Energy uses the potential of the simulated dynamics,
/// `E = theta_dot^2 / 2 + (3g / 2l) cos(theta)`, whose value at rest upright is
/// the target. Torque demands are divided by the torque scale and clipped to
/// the action space.
pub fn pendulum_energy_prior(obs: &[f64]) -> f64 {
    let (theta, theta_dot) = pendulum_angle(obs);
    let k = 3.0 * GRAVITY / (2.0 * LENGTH);
    let torque = if obs[0] < CATCH_COS {
        let energy = 0.5 * theta_dot * theta_dot + k * theta.cos();
        SWING_GAIN * theta_dot * (k - energy)
    } else {
        pd_torque(theta, theta_dot)
    };
    (torque / TORQUE_SCALE).clamp(-1.0, 1.0)
}

/// The PD catch alone. Balances near the top, stalls at the bottom.
pub fn pendulum_pd_prior(obs: &[f64]) -> f64 {
    let (theta, theta_dot) = pendulum_angle(obs);
    (pd_torque(theta, theta_dot) / TORQUE_SCALE).clamp(-1.0, 1.0)
}

const REACH_KP: f64 = 1.0;
const REACH_KD: f64 = 0.8;

/// `clip(kp (goal - p) - kd v, -1, 1)` per axis.
pub fn reacher_pd_prior(obs: &[f64]) -> [f64; 2] {
    let mut a = [0.0; 2];
    for i in 0..2 {
        a[i] = (REACH_KP * (obs[4 + i] - obs[i]) - REACH_KD * obs[2 + i]).clamp(-1.0, 1.0);
    }
    a
}
