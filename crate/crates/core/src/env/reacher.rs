use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Env, EnvError, EnvSpec, Observation, Phase, StepResult};

pub const DT: f64 = 0.1;
pub const MAX_SPEED: f64 = 2.0;
pub const SUCCESS_RADIUS: f64 = 0.1;
pub const SUCCESS_BONUS: f64 = 10.0;
pub const GOAL_MIN_RADIUS: f64 = 0.3;
pub const GOAL_MAX_RADIUS: f64 = 1.5;

/// Planar point-mass reaching task with acceleration control.
///
/// Observation is `(p, v, goal)`. The mass starts at rest at the origin with
/// the goal drawn uniformly over the annulus `0.3 <= |goal| <= 1.5`.
#[derive(Clone, Debug)]
pub struct Reacher {
    spec: EnvSpec,
    pos: [f64; 2],
    vel: [f64; 2],
    goal: [f64; 2],
    steps: usize,
    phase: Phase,
}

impl Default for Reacher {
    fn default() -> Self {
        Self::new()
    }
}

impl Reacher {
    pub fn new() -> Self {
        Self {
            spec: Self::env_spec(),
            pos: [0.0; 2],
            vel: [0.0; 2],
            goal: [1.0, 0.0],
            steps: 0,
            phase: Phase::Fresh,
        }
    }

    pub fn env_spec() -> EnvSpec {
        EnvSpec::symmetric(6, 2, 300)
    }

    pub fn set_state(&mut self, pos: [f64; 2], vel: [f64; 2], goal: [f64; 2]) -> Observation {
        self.pos = pos;
        self.vel = vel;
        self.goal = goal;
        self.steps = 0;
        self.phase = Phase::Running;
        self.observe()
    }

    pub fn goal_distance(&self) -> f64 {
        (self.pos[0] - self.goal[0]).hypot(self.pos[1] - self.goal[1])
    }

    fn observe(&self) -> Observation {
        Observation(vec![
            self.pos[0],
            self.pos[1],
            self.vel[0],
            self.vel[1],
            self.goal[0],
            self.goal[1],
        ])
    }
}

impl Env for Reacher {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Observation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // area-uniform radius on the annulus
        let r2 = rng.random_range(GOAL_MIN_RADIUS.powi(2)..=GOAL_MAX_RADIUS.powi(2));
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let r = r2.sqrt();
        self.set_state([0.0; 2], [0.0; 2], [r * angle.cos(), r * angle.sin()])
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult, EnvError> {
        self.phase.check()?;
        if action.len() != 2 {
            return Err(EnvError::ActionDim { expected: 2, got: action.len() });
        }
        let mut effort = 0.0;
        for i in 0..2 {
            let a = action[i].clamp(-1.0, 1.0);
            effort += a * a;
            self.vel[i] = (self.vel[i] + a * DT).clamp(-MAX_SPEED, MAX_SPEED);
            self.pos[i] += self.vel[i] * DT;
        }
        self.steps += 1;
        let dist = self.goal_distance();
        let terminated = dist < SUCCESS_RADIUS;
        let mut reward = -dist - 0.01 * effort;
        if terminated {
            reward += SUCCESS_BONUS;
        }
        let truncated = !terminated && self.steps >= self.spec.max_episode_steps;
        if terminated || truncated {
            self.phase = Phase::Done;
        }
        Ok(StepResult { next_obs: self.observe(), reward, terminated, truncated })
    }
}
