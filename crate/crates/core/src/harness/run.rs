use std::path::{Path, PathBuf};

use rand::Rng;

use super::{write_record, HarnessError, RecordRow, RowKind, RunConfig, RunRecord};
use crate::agent::{Agent, ReplayBuffer, Transition};
use crate::env::{EnvKind, EnvSpec};
use crate::masking::{action_mapping, apply_epsilon_masking, compute_bounds, ActionBounds, EpsilonSchedule, MaskDecision};
use crate::priors::PriorPolicy;
use crate::rng::{stream, Stream};

/// A finished run: its record plus the trained agent and replay buffer.
#[derive(Debug)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub agent: Agent,
    pub buffer: ReplayBuffer,
}

/// Episode seeds used by every evaluation of a run. Drawn from the run's
/// evaluation stream, so evaluation never advances a training stream.
pub fn eval_seeds(run_seed: u64, episodes: usize) -> Vec<u64> {
    let mut rng = stream(run_seed, Stream::Eval);
    (0..episodes).map(|_| rng.random()).collect()
}

/// Mean return of noise-free rollouts with the whole action space available.
/// A masking-aware actor receives the full-space bounds as its bound input.
pub fn evaluate(agent: &Agent, env: EnvKind, seeds: &[u64]) -> f64 {
    evaluate_episodes(agent, env, seeds).iter().sum::<f64>() / seeds.len() as f64
}

/// Per-episode returns behind [`evaluate`], one per seed.
pub fn evaluate_episodes(agent: &Agent, env: EnvKind, seeds: &[u64]) -> Vec<f64> {
    let mut env = env.make();
    let full = ActionBounds::full(env.spec());
    seeds
        .iter()
        .map(|&seed| {
            let mut obs = env.reset(seed);
            let mut ret = 0.0;
            loop {
                let action = agent.greedy_action(&obs, &full);
                let step = env.step(&action).expect("greedy action within the action space");
                ret += step.reward;
                if step.done() {
                    return ret;
                }
                obs = step.next_obs;
            }
        })
        .collect()
}

/// Build the configured prior and run.
pub fn run(config: &RunConfig) -> Result<RunOutcome, HarnessError> {
    config.validate()?;
    let prior = config.prior.build(config.env, config.seed)?;
    run_with_prior(config, prior)
}

struct Episode {
    ret: f64,
    len: u64,
    masked: u64,
}

fn bounds_for(prior_action: &[f64], half_window: f64, spec: &EnvSpec) -> Result<ActionBounds, HarnessError> {
    Ok(compute_bounds(prior_action, half_window, spec)?)
}

/// The training loop with an already constructed prior (or none).
///
/// Per step: query the prior, form the window, draw the mask coin, act
/// (uniform in the window during warmup), step the environment, store the
/// transition with the bounds that apply at the next state, and train once
/// the buffer is warm. Every `eval_interval` steps the greedy policy is
/// evaluated without masking.
pub fn run_with_prior(config: &RunConfig, mut prior: Option<PriorPolicy>) -> Result<RunOutcome, HarnessError> {
    config.validate()?;
    let spec = config.env.spec();
    let agent_cfg = &config.agent;
    let total = config.total_steps();
    let schedule = EpsilonSchedule::new(agent_cfg.masking_fraction, total)?;
    let half_window = agent_cfg.half_window;

    let mut agent = Agent::new(&spec, agent_cfg.clone(), &mut stream(config.seed, Stream::Init))?;
    let mut buffer = ReplayBuffer::new(agent_cfg.buffer_capacity);
    let mut env = config.env.make();
    let mut env_rng = stream(config.seed, Stream::Env);
    let mut noise_rng = stream(config.seed, Stream::ActorNoise);
    let mut coin_rng = stream(config.seed, Stream::MaskCoin);
    let mut warmup_rng = stream(config.seed, Stream::Warmup);
    let mut learner_rng = stream(config.seed, Stream::Learner);
    let seeds = eval_seeds(config.seed, config.eval_episodes);
    let train_from = agent_cfg.batch_size.max(agent_cfg.learning_starts as usize);

    let mut record = RunRecord::default();
    let mut state: Option<(Vec<f64>, Option<Vec<f64>>)> = None;
    let mut episode = Episode { ret: 0.0, len: 0, masked: 0 };

    let outcome = (|| -> Result<(), HarnessError> {
        for t in 0..total {
            let (s, prior_action) = match state.take() {
                Some(st) => st,
                None => {
                    let obs = env.reset(env_rng.random());
                    let pa = prior.as_mut().map(|p| p.act(&obs, &spec)).transpose()?;
                    (obs.0, pa)
                }
            };
            let epsilon = if agent_cfg.epsilon_masking { schedule.epsilon_at(t) } else { 1.0 };
            let decision = match &prior_action {
                None => MaskDecision::unmasked(&spec),
                Some(pa) => apply_epsilon_masking(bounds_for(pa, half_window, &spec)?, epsilon, coin_rng.random(), &spec),
            };
            let action = if t < agent_cfg.learning_starts {
                let x: Vec<f64> = (0..spec.act_dim).map(|_| warmup_rng.random_range(-1.0..=1.0)).collect();
                action_mapping(&x, &decision.bounds)
            } else {
                agent.select_action(&s, &decision, &mut noise_rng).1
            };
            if !decision.bounds.contains(&action) {
                record.bound_violations += 1;
            }

            let step = env.step(&action)?;
            let next_prior = prior.as_mut().map(|p| p.act(&step.next_obs, &spec)).transpose()?;
            let bounds_next = match (&next_prior, decision.masked) {
                (Some(pa), true) => bounds_for(pa, half_window, &spec)?,
                _ => ActionBounds::full(&spec),
            };
            let done = step.done();
            buffer.push(Transition {
                s,
                bounds: decision.bounds,
                a: action,
                r: step.reward,
                s_next: step.next_obs.0.clone(),
                bounds_next,
                terminal: step.terminated,
            });

            record.steps += 1;
            record.epsilon_sum += epsilon;
            episode.ret += step.reward;
            episode.len += 1;
            if decision.masked {
                record.masked_steps += 1;
                episode.masked += 1;
            }
            let steps_done = t + 1;
            if done {
                record.rows.push(RecordRow {
                    t: steps_done,
                    kind: RowKind::Train,
                    episodic_return: episode.ret,
                    epsilon,
                    masked: episode.masked as f64 / episode.len as f64,
                });
                episode = Episode { ret: 0.0, len: 0, masked: 0 };
            } else {
                state = Some((step.next_obs.0, next_prior));
            }

            if buffer.len() >= train_from {
                agent.train_step(&buffer, &mut learner_rng)?;
            }

            if steps_done % config.eval_interval == 0 {
                let ret = evaluate(&agent, config.env, &seeds);
                record.rows.push(RecordRow { t: steps_done, kind: RowKind::Eval, episodic_return: ret, epsilon, masked: 0.0 });
                if config.stop_at_eval.is_some_and(|threshold| ret >= threshold) {
                    break;
                }
            }
        }
        Ok(())
    })();

    if let Some(p) = prior {
        record.diagnostics = p.diagnostics();
        if outcome.is_ok() {
            p.close()?;
        }
    }
    outcome?;
    Ok(RunOutcome { record, agent, buffer })
}

/// Run and write `<stem>.jsonl`, `<stem>.toml` and, when requested, the
/// checkpoint directory `<stem>.ckpt` into the resolved output directory.
/// Returns the record path.
pub fn train(config: &RunConfig) -> Result<(PathBuf, RunOutcome), HarnessError> {
    train_into(config, &config.resolve_out_dir())
}

/// [`train`] with an explicit output directory.
pub fn train_into(config: &RunConfig, out: &Path) -> Result<(PathBuf, RunOutcome), HarnessError> {
    std::fs::create_dir_all(out)?;
    let stem = config.file_stem();
    std::fs::write(out.join(format!("{stem}.toml")), config.to_toml())?;
    let outcome = match run(config) {
        Ok(outcome) => outcome,
        Err(e) => {
            std::fs::write(out.join(format!("{stem}.log")), format!("run aborted: {e}\n"))?;
            return Err(e);
        }
    };
    let path = out.join(format!("{stem}.jsonl"));
    write_record(&path, &outcome.record.rows)?;
    if !outcome.record.diagnostics.is_empty() {
        std::fs::write(out.join(format!("{stem}.log")), outcome.record.diagnostics.join("\n") + "\n")?;
    }
    if config.save_checkpoint {
        outcome.agent.save(out.join(format!("{stem}.ckpt")), Some(config.env.name()))?;
    }
    Ok((path, outcome))
}
