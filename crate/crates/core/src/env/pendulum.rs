use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Env, EnvError, EnvSpec, Observation, Phase, StepResult};

pub const GRAVITY: f64 = 10.0;
pub const MASS: f64 = 1.0;
pub const LENGTH: f64 = 1.0;
pub const DT: f64 = 0.05;
pub const MAX_SPEED: f64 = 8.0;
/// Torque applied per unit of action.
pub const TORQUE_SCALE: f64 = 2.0;

/// Map an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut w = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w += 2.0 * PI;
    }
    w
}

/// Torque-limited pendulum swing-up. `theta = 0` is upright.
///
/// Observation is `(cos theta, sin theta, theta_dot)`. The state is integrated
/// with semi-implicit Euler; the episode is truncated after 200 steps and
/// never terminates.
#[derive(Clone, Debug)]
pub struct Pendulum {
    spec: EnvSpec,
    theta: f64,
    theta_dot: f64,
    steps: usize,
    phase: Phase,
}

impl Default for Pendulum {
    fn default() -> Self {
        Self::new()
    }
}

impl Pendulum {
    pub fn new() -> Self {
        Self { spec: Self::env_spec(), theta: PI, theta_dot: 0.0, steps: 0, phase: Phase::Fresh }
    }

    pub fn env_spec() -> EnvSpec {
        EnvSpec::symmetric(3, 1, 200)
    }

    /// Overwrite the physical state, starting a fresh episode from it.
    pub fn set_state(&mut self, theta: f64, theta_dot: f64) -> Observation {
        self.theta = theta;
        self.theta_dot = theta_dot;
        self.steps = 0;
        self.phase = Phase::Running;
        self.observe()
    }

    pub fn state(&self) -> (f64, f64) {
        (self.theta, self.theta_dot)
    }

    fn observe(&self) -> Observation {
        Observation(vec![self.theta.cos(), self.theta.sin(), self.theta_dot])
    }

    /// One semi-implicit Euler update of `(theta, theta_dot)` under torque `u`.
    pub fn integrate(theta: f64, theta_dot: f64, u: f64) -> (f64, f64) {
        let accel = 3.0 * GRAVITY / (2.0 * LENGTH) * theta.sin() + 3.0 * u / (MASS * LENGTH * LENGTH);
        let new_dot = (theta_dot + accel * DT).clamp(-MAX_SPEED, MAX_SPEED);
        (theta + new_dot * DT, new_dot)
    }

    pub fn cost(theta: f64, theta_dot: f64, u: f64) -> f64 {
        let th = wrap_angle(theta);
        th * th + 0.1 * theta_dot * theta_dot + 0.001 * u * u
    }
}

impl Env for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Observation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = rng.random_range(-PI..PI);
        let theta_dot = rng.random_range(-1.0..1.0);
        self.set_state(theta, theta_dot)
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult, EnvError> {
        self.phase.check()?;
        if action.len() != 1 {
            return Err(EnvError::ActionDim { expected: 1, got: action.len() });
        }
        let u = TORQUE_SCALE * action[0].clamp(-1.0, 1.0);
        let reward = -Self::cost(self.theta, self.theta_dot, u);
        let (theta, theta_dot) = Self::integrate(self.theta, self.theta_dot, u);
        self.theta = theta;
        self.theta_dot = theta_dot;
        self.steps += 1;
        let truncated = self.steps >= self.spec.max_episode_steps;
        if truncated {
            self.phase = Phase::Done;
        }
        Ok(StepResult { next_obs: self.observe(), reward, terminated: false, truncated })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_observation() {
        let mut a = Pendulum::new();
        let mut b = Pendulum::new();
        let oa = a.reset(7);
        let ob = b.reset(7);
        let bits = |o: &Observation| o.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&oa), bits(&ob));
    }

    #[test]
    fn neighbouring_seeds_differ() {
        let mut env = Pendulum::new();
        let differing = (0..100u64)
            .filter(|&s| env.reset(s) != env.reset(s + 1))
            .count();
        assert!(differing >= 99, "only {differing} of 100 seed pairs differ");
    }

    #[test]
    fn bottom_is_an_equilibrium() {
        let mut env = Pendulum::new();
        env.set_state(PI, 0.0);
        env.step(&[0.0]).unwrap();
        let (_, theta_dot) = env.state();
        assert!(theta_dot.abs() < 1e-12);
    }

    #[test]
    fn one_step_from_horizontal_matches_hand_integration() {
        // theta = pi/2, a = 1 => u = 2
        // accel = 15 * 1 + 3 * 2 = 21; theta_dot = 21 * 0.05 = 1.05
        // theta = pi/2 + 1.05 * 0.05 = pi/2 + 0.0525
        let mut env = Pendulum::new();
        env.set_state(PI / 2.0, 0.0);
        let step = env.step(&[1.0]).unwrap();
        let (theta, theta_dot) = env.state();
        assert!((theta_dot - 1.05).abs() < 1e-12);
        assert!((theta - (PI / 2.0 + 0.0525)).abs() < 1e-12);
        // cost uses the pre-step state: (pi/2)^2 + 0 + 0.001 * 4
        assert!((step.reward + (PI * PI / 4.0 + 0.004)).abs() < 1e-12);
    }

    #[test]
    fn truncates_at_200_and_never_terminates() {
        let mut env = Pendulum::new();
        env.reset(3);
        for i in 1..=200 {
            let s = env.step(&[0.3]).unwrap();
            assert!(!s.terminated);
            assert_eq!(s.truncated, i == 200);
        }
        assert_eq!(env.step(&[0.0]), Err(EnvError::EpisodeOver));
    }

    #[test]
    fn reward_is_bounded() {
        let floor = -(PI * PI + 0.1 * 64.0 + 0.001 * 4.0);
        let mut env = Pendulum::new();
        for seed in 0..20 {
            env.reset(seed);
            for k in 0..200 {
                let a = if k % 7 < 4 { 1.0 } else { -1.0 };
                let s = env.step(&[a]).unwrap();
                assert!(s.reward <= 0.0 && s.reward >= floor, "{}", s.reward);
            }
        }
    }

    #[test]
    fn unforced_energy_change_is_second_order() {
        // theta_ddot = k sin(theta) conserves E = 0.5 theta_dot^2 + k cos(theta).
        // One semi-implicit step changes E by
        //   -0.5 dt^2 (k^2 sin^2 + k cos * theta_dot'^2) + O(dt^3),
        // so |dE| <= dt^2 (k^2 + k * MAX_SPEED^2) / 2 with margin for the cubic terms.
        let k = 3.0 * GRAVITY / (2.0 * LENGTH);
        let energy = |th: f64, thd: f64| 0.5 * thd * thd + k * th.cos();
        let per_step_bound = 1.1 * DT * DT * (k * k + k * MAX_SPEED * MAX_SPEED) / 2.0;
        for (th0, thd0) in [(2.0, 0.5), (PI - 0.1, 0.0), (0.3, -1.0)] {
            let mut env = Pendulum::new();
            env.set_state(th0, thd0);
            let (mut th, mut thd) = env.state();
            let start = energy(th, thd);
            for _ in 0..100 {
                let before = energy(th, thd);
                env.step(&[0.0]).unwrap();
                (th, thd) = env.state();
                assert!((energy(th, thd) - before).abs() < per_step_bound);
            }
            // symplectic: no secular drift, mean change per step well under 0.05
            assert!((energy(th, thd) - start).abs() / 100.0 < 0.05);
        }
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.0), 0.0);
    }
}
