//! Prior policies that center the action mask.
//!
//! A prior is a fixed, non-learning map from observation to action. Built-in
//! scripted controllers stand in for hand-written policy scripts; any external
//! script can be hosted through the [`bridge`] wire protocol; a trained
//! agent's greedy policy can serve as an expert prior.

pub mod bridge;
mod candidates;
mod scripted;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Agent, AgentError};
use crate::env::{EnvKind, EnvSpec};
use crate::masking::ActionBounds;

pub use bridge::{Bridge, BridgeError};
pub use candidates::{evaluate_candidates, CandidateReport, CandidateScore};
pub use scripted::{pendulum_energy_prior, pendulum_pd_prior, reacher_pd_prior};

#[derive(Debug, Error)]
pub enum PriorError {
    #[error(transparent)]
    Bridge(#[from] BridgeError),
    #[error("prior spec `{0}` not understood (expected none, expert, pd, random, constant:<v,..>, bridge:<cmd>, actor:<dir>)")]
    Parse(String),
    #[error("prior `{prior}` is not available for {env}")]
    Unsupported { prior: String, env: EnvKind },
    #[error("constant prior has {got} values, environment needs {expected}")]
    ConstantDim { expected: usize, got: usize },
    #[error("prior checkpoint: {0}")]
    Checkpoint(#[from] AgentError),
}

/// Textual description of a prior, as given on the command line or in a config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PriorSpec {
    #[default]
    None,
    /// The strongest scripted controller for the environment.
    Expert,
    /// A plain PD controller (for the pendulum it balances but cannot swing up).
    Pd,
    Random,
    Constant(Vec<f64>),
    Bridge(String),
    /// Greedy policy of a saved agent.
    Actor(PathBuf),
}

impl PriorSpec {
    pub fn is_none(&self) -> bool {
        matches!(self, PriorSpec::None)
    }

    /// Instantiate the prior. `seed` keys the random prior's own stream.
    pub fn build(&self, env: EnvKind, seed: u64) -> Result<Option<PriorPolicy>, PriorError> {
        let spec = env.spec();
        let policy = match self {
            PriorSpec::None => return Ok(None),
            PriorSpec::Expert => match env {
                EnvKind::Pendulum => PriorPolicy::PendulumEnergy,
                EnvKind::Reacher => PriorPolicy::ReacherPd,
            },
            PriorSpec::Pd => match env {
                EnvKind::Pendulum => PriorPolicy::PendulumPd,
                EnvKind::Reacher => PriorPolicy::ReacherPd,
            },
            PriorSpec::Random => PriorPolicy::random(crate::rng::stream(seed, crate::rng::Stream::Prior)),
            PriorSpec::Constant(values) => {
                if values.len() != spec.act_dim {
                    return Err(PriorError::ConstantDim { expected: spec.act_dim, got: values.len() });
                }
                PriorPolicy::Constant(values.clone())
            }
            PriorSpec::Bridge(command) => PriorPolicy::Bridge(Bridge::spawn(command, &spec)?),
            PriorSpec::Actor(dir) => PriorPolicy::Actor(Box::new(Agent::load(dir, &spec)?)),
        };
        Ok(Some(policy))
    }
}

impl fmt::Display for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorSpec::None => f.write_str("none"),
            PriorSpec::Expert => f.write_str("expert"),
            PriorSpec::Pd => f.write_str("pd"),
            PriorSpec::Random => f.write_str("random"),
            PriorSpec::Constant(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "constant:{}", parts.join(","))
            }
            PriorSpec::Bridge(cmd) => write!(f, "bridge:{cmd}"),
            PriorSpec::Actor(dir) => write!(f, "actor:{}", dir.display()),
        }
    }
}

impl FromStr for PriorSpec {
    type Err = PriorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parse_err = || PriorError::Parse(s.to_string());
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r.trim())),
            None => (s, None),
        };
        match (head, rest) {
            ("none", None) => Ok(PriorSpec::None),
            ("expert", None) => Ok(PriorSpec::Expert),
            ("pd", None) => Ok(PriorSpec::Pd),
            ("random", None) => Ok(PriorSpec::Random),
            ("constant", Some(values)) => values
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map(PriorSpec::Constant)
                .map_err(|_| parse_err()),
            ("bridge", Some(cmd)) if !cmd.is_empty() => Ok(PriorSpec::Bridge(cmd.to_string())),
            ("actor", Some(dir)) if !dir.is_empty() => Ok(PriorSpec::Actor(PathBuf::from(dir))),
            _ => Err(parse_err()),
        }
    }
}

impl TryFrom<String> for PriorSpec {
    type Error = PriorError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<PriorSpec> for String {
    fn from(p: PriorSpec) -> String {
        p.to_string()
    }
}

/// A live prior policy.
#[derive(Debug)]
pub enum PriorPolicy {
    PendulumEnergy,
    PendulumPd,
    ReacherPd,
    Constant(Vec<f64>),
    /// Uniform over the action space, from its own seeded stream.
    Random(Box<ChaCha8Rng>),
    Bridge(Bridge),
    Actor(Box<Agent>),
}

impl PriorPolicy {
    pub fn random(rng: ChaCha8Rng) -> Self {
        PriorPolicy::Random(Box::new(rng))
    }

    /// The prior's action for `obs`, clipped into the action space.
    pub fn act(&mut self, obs: &[f64], spec: &EnvSpec) -> Result<Vec<f64>, PriorError> {
        let mut action = match self {
            PriorPolicy::PendulumEnergy => vec![pendulum_energy_prior(obs)],
            PriorPolicy::PendulumPd => vec![pendulum_pd_prior(obs)],
            PriorPolicy::ReacherPd => reacher_pd_prior(obs).to_vec(),
            PriorPolicy::Constant(v) => v.clone(),
            PriorPolicy::Random(rng) => spec
                .action_low
                .iter()
                .zip(&spec.action_high)
                .map(|(&lo, &hi)| rng.random_range(lo..=hi))
                .collect(),
            PriorPolicy::Bridge(bridge) => bridge.act(obs)?,
            PriorPolicy::Actor(agent) => agent.greedy_action(obs, &ActionBounds::full(spec)),
        };
        spec.clip(&mut action);
        Ok(action)
    }

    /// Shut down any external process. Scripted priors have nothing to release.
    pub fn close(self) -> Result<(), PriorError> {
        if let PriorPolicy::Bridge(bridge) = self {
            bridge.close()?;
        }
        Ok(())
    }

    /// Lines the hosted process wrote to stderr so far.
    pub fn diagnostics(&self) -> Vec<String> {
        match self {
            PriorPolicy::Bridge(b) => b.stderr_lines(),
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn spec_strings_round_trip() {
        for s in ["none", "expert", "pd", "random", "constant:0.2", "constant:0.5,-0.25", "bridge:python3 policy.py", "actor:out/ckpt"] {
            let p: PriorSpec = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        for bad in ["", "constant", "constant:x", "bridge:", "llm"] {
            assert!(bad.parse::<PriorSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn constant_prior_is_constant() {
        let spec = EnvKind::Pendulum.spec();
        let mut p = PriorSpec::Constant(vec![0.2]).build(EnvKind::Pendulum, 0).unwrap().unwrap();
        for obs in [[1.0, 0.0, 0.0], [-1.0, 0.0, 3.0]] {
            assert_eq!(p.act(&obs, &spec).unwrap(), vec![0.2]);
        }
        assert!(matches!(
            PriorSpec::Constant(vec![0.1]).build(EnvKind::Reacher, 0),
            Err(PriorError::ConstantDim { .. })
        ));
    }

    #[test]
    fn random_prior_is_centered() {
        let spec = EnvKind::Reacher.spec();
        let mut p = PriorPolicy::random(ChaCha8Rng::seed_from_u64(3));
        let mut sum = [0.0; 2];
        for _ in 0..10_000 {
            let a = p.act(&[0.0; 6], &spec).unwrap();
            assert!(spec.contains(&a));
            sum[0] += a[0];
            sum[1] += a[1];
        }
        assert!(sum.iter().all(|s| (s / 10_000.0).abs() < 0.05), "{sum:?}");
    }

    #[test]
    fn all_priors_stay_in_the_action_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for env in [EnvKind::Pendulum, EnvKind::Reacher] {
            let spec = env.spec();
            for prior in [PriorSpec::Expert, PriorSpec::Pd, PriorSpec::Random] {
                let mut p = prior.build(env, 9).unwrap().unwrap();
                for _ in 0..10_000 {
                    let obs: Vec<f64> = (0..spec.obs_dim).map(|_| rng.random_range(-5.0..5.0)).collect();
                    let a = p.act(&obs, &spec).unwrap();
                    assert!(spec.contains(&a) && a.iter().all(|v| v.is_finite()));
                }
            }
        }
    }

    #[test]
    fn scripted_priors_are_pure() {
        let spec = EnvKind::Reacher.spec();
        let mut p = PriorSpec::Expert.build(EnvKind::Reacher, 0).unwrap().unwrap();
        let obs = [0.1, -0.2, 0.3, 0.0, 1.0, 0.5];
        assert_eq!(p.act(&obs, &spec).unwrap(), p.act(&obs, &spec).unwrap());
    }
}
