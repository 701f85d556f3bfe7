//! Plain TD3 with no notion of bounds, priors or masking, written directly
//! against the network primitives. It consumes the run's random streams in
//! the same order as the harness so a baseline run can be compared with it
//! bit for bit.

use camel::env::EnvSpec;
use camel::harness::RunConfig;
use camel::nn::{Activation, Adam, AdamConfig, Mlp};
use camel::rng::{stream, Stream};
use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub struct Step {
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub r: f64,
    pub s_next: Vec<f64>,
    pub terminal: bool,
}

pub struct Reference {
    pub steps: Vec<Step>,
    pub episode_returns: Vec<(u64, f64)>,
    pub actor: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub actor_target: Mlp,
}

fn rows(steps: &[&Step], f: impl Fn(&Step) -> &[f64]) -> Array2<f64> {
    let width = f(steps[0]).len();
    let flat: Vec<f64> = steps.iter().flat_map(|t| f(t).iter().copied()).collect();
    Array2::from_shape_vec((steps.len(), width), flat).unwrap()
}

fn col(v: &[f64]) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((v.len(), 1), v).unwrap()
}

fn critic_step(critic: &mut Mlp, opt: &mut Adam, sa: &Array2<f64>, y: &[f64]) {
    let (q, cache) = critic.forward_batch(sa.view()).unwrap();
    let n = y.len() as f64;
    let dq: Vec<f64> = q.column(0).iter().zip(y).map(|(q, y)| 2.0 * (q - y) / n).collect();
    let (grads, _) = critic.backward(&cache, col(&dq)).unwrap();
    opt.step(critic, &grads).unwrap();
}

pub fn plain_td3(config: &RunConfig) -> Reference {
    let spec: EnvSpec = config.env.spec();
    let cfg = &config.agent;
    let (obs_dim, act_dim) = (spec.obs_dim, spec.act_dim);
    let sizes = |input: usize, output: usize| {
        let mut v = vec![input];
        v.extend(&cfg.hidden);
        v.push(output);
        v
    };
    let mut init = stream(config.seed, Stream::Init);
    let mut actor = Mlp::new(&sizes(obs_dim, act_dim), Activation::Tanh, 0.1, &mut init);
    let mut critic1 = Mlp::new(&sizes(obs_dim + act_dim, 1), Activation::Identity, 1.0, &mut init);
    let mut critic2 = Mlp::new(&sizes(obs_dim + act_dim, 1), Activation::Identity, 1.0, &mut init);
    let (mut actor_t, mut critic1_t, mut critic2_t) = (actor.clone(), critic1.clone(), critic2.clone());
    let mut actor_opt = Adam::new(&actor, AdamConfig { lr: cfg.actor_lr, ..Default::default() });
    let mut c1_opt = Adam::new(&critic1, AdamConfig { lr: cfg.critic_lr, ..Default::default() });
    let mut c2_opt = Adam::new(&critic2, AdamConfig { lr: cfg.critic_lr, ..Default::default() });

    let mut env = config.env.make();
    let mut env_rng = stream(config.seed, Stream::Env);
    let mut noise_rng = stream(config.seed, Stream::ActorNoise);
    let mut warmup_rng = stream(config.seed, Stream::Warmup);
    let mut learner_rng = stream(config.seed, Stream::Learner);
    let explore = Normal::new(0.0, cfg.explore_sigma).unwrap();
    let smooth = Normal::new(0.0, cfg.target_sigma).unwrap();
    let train_from = cfg.batch_size.max(cfg.learning_starts as usize);

    let mut steps: Vec<Step> = Vec::new();
    let mut episode_returns = Vec::new();
    let mut obs: Option<Vec<f64>> = None;
    let mut ret = 0.0;
    let mut learner_steps = 0u64;

    for t in 0..config.total_steps() {
        let s = match obs.take() {
            Some(s) => s,
            None => env.reset(env_rng.random()).0,
        };
        let a: Vec<f64> = if t < cfg.learning_starts {
            (0..act_dim).map(|_| warmup_rng.random_range(-1.0..=1.0)).collect()
        } else {
            let x = actor.forward(&s).unwrap().0;
            x.iter()
                .map(|v| {
                    let noisy = if cfg.explore_sigma > 0.0 { v + explore.sample(&mut noise_rng) } else { *v };
                    noisy.clamp(-1.0, 1.0)
                })
                .collect()
        };
        let step = env.step(&a).unwrap();
        ret += step.reward;
        let done = step.done();
        steps.push(Step { s, a, r: step.reward, s_next: step.next_obs.0.clone(), terminal: step.terminated });
        if done {
            episode_returns.push((t + 1, ret));
            ret = 0.0;
        } else {
            obs = Some(step.next_obs.0);
        }

        if steps.len() < train_from {
            continue;
        }
        learner_steps += 1;
        let idx: Vec<usize> = (0..cfg.batch_size).map(|_| learner_rng.random_range(0..steps.len())).collect();
        let batch: Vec<&Step> = idx.iter().map(|&i| &steps[i]).collect();
        let (bs, ba, bs2) = (rows(&batch, |t| &t.s), rows(&batch, |t| &t.a), rows(&batch, |t| &t.s_next));

        let c = cfg.noise_clip;
        let noise = Array2::from_shape_simple_fn((batch.len(), act_dim), || smooth.sample(&mut learner_rng).clamp(-c, c));
        let a2 = (actor_t.predict(bs2.view()).unwrap() + &noise).mapv(|v| v.clamp(-1.0, 1.0));
        let sa2 = concatenate![Axis(1), bs2, a2];
        let q1 = critic1_t.predict(sa2.view()).unwrap();
        let q2 = critic2_t.predict(sa2.view()).unwrap();
        let y: Vec<f64> = batch
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let live = if t.terminal { 0.0 } else { 1.0 };
                t.r + cfg.gamma * live * q1[[i, 0]].min(q2[[i, 0]])
            })
            .collect();

        let sa = concatenate![Axis(1), bs, ba];
        critic_step(&mut critic1, &mut c1_opt, &sa, &y);
        critic_step(&mut critic2, &mut c2_opt, &sa, &y);

        if learner_steps % cfg.policy_delay == 0 {
            let (x, actor_cache) = actor.forward_batch(bs.view()).unwrap();
            let sx = concatenate![Axis(1), bs, x];
            let (_, critic_cache) = critic1.forward_batch(sx.view()).unwrap();
            let n = batch.len();
            let dq = vec![-1.0 / n as f64; n];
            let d_input = critic1.input_gradient(&critic_cache, col(&dq)).unwrap();
            let dx = d_input.slice(s![.., obs_dim..]).to_owned();
            let (grads, _) = actor.backward(&actor_cache, dx.view()).unwrap();
            actor_opt.step(&mut actor, &grads).unwrap();
            actor_t.polyak_from(&actor, cfg.tau).unwrap();
            critic1_t.polyak_from(&critic1, cfg.tau).unwrap();
            critic2_t.polyak_from(&critic2, cfg.tau).unwrap();
        }
    }
    Reference { steps, episode_returns, actor, critic1, critic2, actor_target: actor_t }
}
