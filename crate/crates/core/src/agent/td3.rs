use std::path::Path;

use ndarray::{concatenate, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{AgentConfig, AgentError, Batch, ReplayBuffer};
use crate::env::EnvSpec;
use crate::masking::{action_mapping, jacobian_scalar, map_scalar, ActionBounds, MaskDecision};
use crate::nn::{Activation, Adam, AdamConfig, Gradients, Mlp};

/// Actor input: the state alone, or the state followed by the active
/// lower and upper bounds when the actor is masking-aware.
pub fn actor_input(s: &[f64], bounds: &ActionBounds, masking_aware: bool) -> Vec<f64> {
    if masking_aware {
        s.iter().copied().chain(bounds.concat()).collect()
    } else {
        s.to_vec()
    }
}

fn batch_actor_input(s: &Array2<f64>, lower: &Array2<f64>, upper: &Array2<f64>, masking_aware: bool) -> Array2<f64> {
    if masking_aware {
        concatenate![Axis(1), *s, *lower, *upper]
    } else {
        s.clone()
    }
}

fn critic_input(s: &Array2<f64>, a: &Array2<f64>) -> Array2<f64> {
    concatenate![Axis(1), *s, *a]
}

fn map_batch(x: &Array2<f64>, lower: &Array2<f64>, upper: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    Zip::from(&mut out).and(lower).and(upper).for_each(|v, &lo, &hi| *v = map_scalar(*v, lo, hi));
    out
}

fn clip_batch(a: &mut Array2<f64>, lower: &Array2<f64>, upper: &Array2<f64>) {
    Zip::from(a).and(lower).and(upper).for_each(|v, &lo, &hi| *v = v.clamp(lo, hi));
}

fn column(v: &[f64]) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((v.len(), 1), v).expect("column view")
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrainMetrics {
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    /// Present on the steps that update the actor and the targets.
    pub actor_loss: Option<f64>,
}

/// Online and target networks, their optimisers, and the learner counter.
#[derive(Clone, Debug)]
pub struct Agent {
    pub actor: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub actor_target: Mlp,
    pub critic1_target: Mlp,
    pub critic2_target: Mlp,
    actor_opt: Adam,
    critic1_opt: Adam,
    critic2_opt: Adam,
    config: AgentConfig,
    spec: EnvSpec,
    learner_steps: u64,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    env: Option<String>,
    obs_dim: usize,
    act_dim: usize,
    learner_steps: u64,
    config: AgentConfig,
}

const NETWORK_FILES: [&str; 6] =
    ["actor.txt", "critic1.txt", "critic2.txt", "actor_target.txt", "critic1_target.txt", "critic2_target.txt"];

impl Agent {
    pub fn new(spec: &EnvSpec, config: AgentConfig, rng: &mut impl Rng) -> Result<Self, AgentError> {
        config.validate()?;
        let actor_in = spec.obs_dim + if config.masking_aware { 2 * spec.act_dim } else { 0 };
        let sizes = |input: usize, output: usize| {
            let mut v = vec![input];
            v.extend(&config.hidden);
            v.push(output);
            v
        };
        let actor = Mlp::new(&sizes(actor_in, spec.act_dim), Activation::Tanh, 0.1, rng);
        let critic1 = Mlp::new(&sizes(spec.obs_dim + spec.act_dim, 1), Activation::Identity, 1.0, rng);
        let critic2 = Mlp::new(&sizes(spec.obs_dim + spec.act_dim, 1), Activation::Identity, 1.0, rng);
        Ok(Self::assemble(actor, critic1, critic2, None, config, spec.clone(), 0))
    }

    fn assemble(
        actor: Mlp,
        critic1: Mlp,
        critic2: Mlp,
        targets: Option<(Mlp, Mlp, Mlp)>,
        config: AgentConfig,
        spec: EnvSpec,
        learner_steps: u64,
    ) -> Self {
        let actor_cfg = AdamConfig { lr: config.actor_lr, ..Default::default() };
        let critic_cfg = AdamConfig { lr: config.critic_lr, ..Default::default() };
        let (actor_target, critic1_target, critic2_target) =
            targets.unwrap_or_else(|| (actor.clone(), critic1.clone(), critic2.clone()));
        Self {
            actor_opt: Adam::new(&actor, actor_cfg),
            critic1_opt: Adam::new(&critic1, critic_cfg),
            critic2_opt: Adam::new(&critic2, critic_cfg),
            actor,
            critic1,
            critic2,
            actor_target,
            critic1_target,
            critic2_target,
            config,
            spec,
            learner_steps,
        }
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    /// Number of completed learner iterations.
    pub fn learner_steps(&self) -> u64 {
        self.learner_steps
    }

    /// Raw actor output `x` in `[-1, 1]`.
    pub fn actor_output(&self, s: &[f64], bounds: &ActionBounds) -> Vec<f64> {
        let input = actor_input(s, bounds, self.config.masking_aware);
        self.actor.forward(&input).expect("actor input shape").0
    }

    /// Noise-free action inside `bounds`.
    pub fn greedy_action(&self, s: &[f64], bounds: &ActionBounds) -> Vec<f64> {
        action_mapping(&self.actor_output(s, bounds), bounds)
    }

    /// Behaviour action: mapped actor output plus Gaussian noise, clipped
    /// back into the decision's bounds. Returns `(x, a)`.
    pub fn select_action(&self, s: &[f64], decision: &MaskDecision, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
        let x = self.actor_output(s, &decision.bounds);
        let mut a = action_mapping(&x, &decision.bounds);
        if self.config.explore_sigma > 0.0 {
            let noise = Normal::new(0.0, self.config.explore_sigma).expect("finite sigma");
            for v in &mut a {
                *v += noise.sample(rng);
            }
        }
        decision.bounds.clip(&mut a);
        (x, a)
    }

    /// Clipped double-Q targets with target policy smoothing.
    pub fn td_target(&self, batch: &Batch, rng: &mut impl Rng) -> Vec<f64> {
        let noise_dist = Normal::new(0.0, self.config.target_sigma).expect("finite sigma");
        let c = self.config.noise_clip;
        let noise = Array2::from_shape_simple_fn(batch.lower_next.dim(), || noise_dist.sample(rng).clamp(-c, c));
        self.td_target_with_noise(batch, &noise)
    }

    /// [`Agent::td_target`] with the smoothing noise supplied by the caller.
    pub fn td_target_with_noise(&self, batch: &Batch, noise: &Array2<f64>) -> Vec<f64> {
        let input = batch_actor_input(&batch.s_next, &batch.lower_next, &batch.upper_next, self.config.masking_aware);
        let x = self.actor_target.predict(input.view()).expect("actor input shape");
        let mut a = map_batch(&x, &batch.lower_next, &batch.upper_next) + noise;
        clip_batch(&mut a, &batch.lower_next, &batch.upper_next);
        let q_in = critic_input(&batch.s_next, &a);
        let q1 = self.critic1_target.predict(q_in.view()).expect("critic input shape");
        let q2 = self.critic2_target.predict(q_in.view()).expect("critic input shape");
        (0..batch.len())
            .map(|i| {
                let bootstrap = if batch.terminal[i] { 0.0 } else { 1.0 };
                batch.r[i] + self.config.gamma * bootstrap * q1[[i, 0]].min(q2[[i, 0]])
            })
            .collect()
    }

    /// Mean squared TD error of one critic against `y` and its parameter gradients.
    pub fn critic_loss_and_grads(critic: &Mlp, batch: &Batch, y: &[f64]) -> (f64, Gradients) {
        let input = critic_input(&batch.s, &batch.a);
        let (q, cache) = critic.forward_batch(input.view()).expect("critic input shape");
        let n = y.len() as f64;
        let resid: Vec<f64> = q.column(0).iter().zip(y).map(|(q, y)| q - y).collect();
        let loss = resid.iter().map(|r| r * r).sum::<f64>() / n;
        let dq: Vec<f64> = resid.iter().map(|r| 2.0 * r / n).collect();
        let (grads, _) = critic.backward(&cache, column(&dq)).expect("critic cache");
        (loss, grads)
    }

    /// One Adam step on each critic. Returns both losses before the step.
    pub fn update_critics(&mut self, batch: &Batch, y: &[f64]) -> (f64, f64) {
        assert_eq!(y.len(), batch.len(), "one target per transition");
        let (l1, g1) = Self::critic_loss_and_grads(&self.critic1, batch, y);
        let (l2, g2) = Self::critic_loss_and_grads(&self.critic2, batch, y);
        self.critic1_opt.step(&mut self.critic1, &g1).expect("critic shapes");
        self.critic2_opt.step(&mut self.critic2, &g2).expect("critic shapes");
        (l1, l2)
    }

    /// Actor loss `-mean Q1(s, map(actor(s, lb, ub)))` with its gradients.
    ///
    /// Also returns the gradient with respect to the actor output `x`, which
    /// is the critic's action gradient scaled by the mapping jacobian.
    pub fn actor_loss_and_grads(&self, batch: &Batch) -> (f64, Gradients, Array2<f64>) {
        let input = batch_actor_input(&batch.s, &batch.lower, &batch.upper, self.config.masking_aware);
        let (x, actor_cache) = self.actor.forward_batch(input.view()).expect("actor input shape");
        let a = map_batch(&x, &batch.lower, &batch.upper);
        let q_in = critic_input(&batch.s, &a);
        let (q, critic_cache) = self.critic1.forward_batch(q_in.view()).expect("critic input shape");
        let n = batch.len() as f64;
        let loss = -q.sum() / n;
        let dq = vec![-1.0 / n; batch.len()];
        let d_input = self.critic1.input_gradient(&critic_cache, column(&dq)).expect("critic cache");
        let obs_dim = batch.s.ncols();
        let mut dx = d_input.slice(ndarray::s![.., obs_dim..]).to_owned();
        Zip::from(&mut dx)
            .and(&batch.lower)
            .and(&batch.upper)
            .for_each(|g, &lo, &hi| *g *= jacobian_scalar(lo, hi));
        let (grads, _) = self.actor.backward(&actor_cache, dx.view()).expect("actor cache");
        (loss, grads, dx)
    }

    /// Deterministic policy-gradient ascent step on the actor.
    pub fn update_actor(&mut self, batch: &Batch) -> f64 {
        let (loss, grads, _) = self.actor_loss_and_grads(batch);
        self.actor_opt.step(&mut self.actor, &grads).expect("actor shapes");
        loss
    }

    pub fn update_targets(&mut self) {
        let tau = self.config.tau;
        self.actor_target.polyak_from(&self.actor, tau).expect("target shapes");
        self.critic1_target.polyak_from(&self.critic1, tau).expect("target shapes");
        self.critic2_target.polyak_from(&self.critic2, tau).expect("target shapes");
    }

    /// One learner iteration: sample, critic step, and every `policy_delay`
    /// iterations an actor step followed by Polyak updates of all targets.
    pub fn train_step(&mut self, buffer: &ReplayBuffer, rng: &mut impl Rng) -> Result<TrainMetrics, AgentError> {
        let needed = self.config.batch_size.max(self.config.learning_starts as usize);
        if buffer.len() < needed {
            return Err(AgentError::Underfilled { size: buffer.len(), needed });
        }
        let batch = buffer.sample(self.config.batch_size, rng);
        self.train_on_batch(&batch, rng)
    }

    pub fn train_on_batch(&mut self, batch: &Batch, rng: &mut impl Rng) -> Result<TrainMetrics, AgentError> {
        self.learner_steps += 1;
        let y = self.td_target(batch, rng);
        let (critic1_loss, critic2_loss) = self.update_critics(batch, &y);
        let mut actor_loss = None;
        if self.learner_steps % self.config.policy_delay == 0 {
            actor_loss = Some(self.update_actor(batch));
            self.update_targets();
        }
        Ok(TrainMetrics { critic1_loss, critic2_loss, actor_loss })
    }

    /// Write every network plus a manifest into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>, env: Option<&str>) -> Result<(), AgentError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let nets = [&self.actor, &self.critic1, &self.critic2, &self.actor_target, &self.critic1_target, &self.critic2_target];
        for (net, name) in nets.iter().zip(NETWORK_FILES) {
            net.save(dir.join(name))?;
        }
        let manifest = Manifest {
            env: env.map(str::to_string),
            obs_dim: self.spec.obs_dim,
            act_dim: self.spec.act_dim,
            learner_steps: self.learner_steps,
            config: self.config.clone(),
        };
        let text = toml::to_string(&manifest).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
        std::fs::write(dir.join("manifest.toml"), text)?;
        Ok(())
    }

    /// Load a checkpoint written by [`Agent::save`]. Optimiser moments start fresh.
    pub fn load(dir: impl AsRef<Path>, spec: &EnvSpec) -> Result<Self, AgentError> {
        let dir = dir.as_ref();
        let text = std::fs::read_to_string(dir.join("manifest.toml"))?;
        let manifest: Manifest = toml::from_str(&text).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
        if manifest.obs_dim != spec.obs_dim || manifest.act_dim != spec.act_dim {
            return Err(AgentError::Checkpoint(format!(
                "checkpoint is for obs_dim={} act_dim={}, environment has obs_dim={} act_dim={}",
                manifest.obs_dim, manifest.act_dim, spec.obs_dim, spec.act_dim
            )));
        }
        let mut nets = NETWORK_FILES
            .iter()
            .map(|name| Mlp::load(dir.join(name)))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter();
        let mut next = || nets.next().expect("six networks");
        let (actor, critic1, critic2) = (next(), next(), next());
        let targets = (next(), next(), next());
        let expected_in = spec.obs_dim + if manifest.config.masking_aware { 2 * spec.act_dim } else { 0 };
        if actor.input_dim() != expected_in || actor.output_dim() != spec.act_dim {
            return Err(AgentError::Checkpoint("actor shape does not match manifest".into()));
        }
        Ok(Self::assemble(actor, critic1, critic2, Some(targets), manifest.config, spec.clone(), manifest.learner_steps))
    }

    /// Read only the environment name recorded in a checkpoint manifest.
    pub fn checkpoint_env(dir: impl AsRef<Path>) -> Result<Option<String>, AgentError> {
        let text = std::fs::read_to_string(dir.as_ref().join("manifest.toml"))?;
        let manifest: Manifest = toml::from_str(&text).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
        Ok(manifest.env)
    }
}
