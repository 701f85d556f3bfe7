use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitCode};
use std::thread;
use std::time::Duration;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};

use camel::env::EnvKind;
use camel::harness::{
    aggregate, eval_seeds, evaluate, read_record, train_into, write_csv, Arm, RecordRow, RowKind, RunConfig,
};
use camel::priors::bridge::serve;
use camel::priors::{evaluate_candidates, CandidateReport, CandidateScore, PriorSpec};
use camel::Agent;

#[derive(Parser)]
#[command(name = "camel", version, about = "Masking-aware TD3 with epsilon-decayed action masking")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train one run and write its record file.
    Train(TrainArgs),
    /// Train every arm for every seed, one child process per run.
    Sweep(SweepArgs),
    /// Roll out a saved checkpoint without masking.
    Eval(EvalArgs),
    /// Score candidate priors on one episode each and pick one.
    ScoreCandidates(ScoreArgs),
    /// Turn record files into per-arm mean/std curves.
    Aggregate(AggregateArgs),
    /// Host a built-in prior over the bridge protocol on stdin/stdout.
    #[command(hide = true)]
    ServePrior(ServeArgs),
}

/// Run settings shared by `train` and `sweep`.
#[derive(Args, Clone, Debug, Default)]
struct RunOverrides {
    /// Flat TOML config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<EnvKind>,
    #[arg(long)]
    total_steps: Option<u64>,
    #[arg(long)]
    eval_interval: Option<u64>,
    #[arg(long)]
    eval_episodes: Option<usize>,
    #[arg(long)]
    half_window: Option<f64>,
    #[arg(long)]
    masking_fraction: Option<f64>,
    /// End the run at the first evaluation at or above this return.
    #[arg(long, allow_hyphen_values = true)]
    stop_at_eval: Option<f64>,
    /// Any config key, e.g. `--set actor_lr=1e-3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunOverrides {
    fn to_args(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut push = |flag: &str, value: Option<String>| {
            if let Some(v) = value {
                out.push(flag.to_string());
                out.push(v);
            }
        };
        push("--config", self.config.as_ref().map(|p| p.display().to_string()));
        push("--env", self.env.map(|e| e.to_string()));
        push("--total-steps", self.total_steps.map(|v| v.to_string()));
        push("--eval-interval", self.eval_interval.map(|v| v.to_string()));
        push("--eval-episodes", self.eval_episodes.map(|v| v.to_string()));
        push("--half-window", self.half_window.map(|v| v.to_string()));
        push("--masking-fraction", self.masking_fraction.map(|v| v.to_string()));
        push("--stop-at-eval", self.stop_at_eval.map(|v| v.to_string()));
        for kv in &self.set {
            push("--set", Some(kv.clone()));
        }
        out
    }

    fn base_config(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(env) = self.env {
            config.env = env;
        }
        Ok(config)
    }

    fn apply(&self, config: &mut RunConfig) -> Result<()> {
        if let Some(v) = self.total_steps {
            config.total_steps = Some(v);
        }
        if let Some(v) = self.eval_interval {
            config.eval_interval = v;
        }
        if let Some(v) = self.eval_episodes {
            config.eval_episodes = v;
        }
        if let Some(v) = self.half_window {
            config.agent.half_window = v;
        }
        if let Some(v) = self.masking_fraction {
            config.agent.masking_fraction = v;
        }
        if self.stop_at_eval.is_some() {
            config.stop_at_eval = self.stop_at_eval;
        }
        if !self.set.is_empty() {
            *config = apply_sets(config, &self.set)?;
        }
        Ok(())
    }
}

/// Apply `key=value` pairs through the TOML form of the config so every key
/// gets the same validation as in a config file.
fn apply_sets(config: &RunConfig, sets: &[String]) -> Result<RunConfig> {
    let mut table: toml::Table = toml::from_str(&config.to_toml()).context("config serialises")?;
    for kv in sets {
        let (key, raw) = kv.split_once('=').with_context(|| format!("`--set {kv}` is not KEY=VALUE"))?;
        let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
            Ok(mut t) => t.remove("v").expect("parsed key"),
            Err(_) => toml::Value::String(raw.to_string()),
        };
        table.insert(key.trim().to_string(), value);
    }
    Ok(RunConfig::from_toml(&toml::to_string(&table)?)?)
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    run: RunOverrides,
    /// Ablation arm; sets the prior and the masking switches.
    #[arg(long)]
    arm: Option<Arm>,
    /// none, expert, pd, random, constant:<v,..>, bridge:<cmd>, actor:<dir>
    #[arg(long)]
    prior: Option<PriorSpec>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run label used in output file names.
    #[arg(long)]
    name: Option<String>,
    /// Output directory (takes precedence over CAMEL_OUT and the config file).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    masking_aware: Option<bool>,
    #[arg(long)]
    epsilon_masking: Option<bool>,
    #[arg(long)]
    save_checkpoint: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    run: RunOverrides,
    /// Comma-separated arm names.
    #[arg(long, value_delimiter = ',', required = true)]
    arms: Vec<Arm>,
    /// Inclusive range `a..b` or a comma-separated list.
    #[arg(long, value_parser = parse_seeds)]
    seeds: Seeds,
    /// Parallel child processes (default: available cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let seeds = if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("bad seed range start: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("bad seed range end: {e}"))?;
        if b < a {
            return Err(format!("empty seed range {s}"));
        }
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|v| v.trim().parse::<u64>().map_err(|e| format!("bad seed `{v}`: {e}")))
            .collect::<Result<Vec<_>, _>>()?
    };
    Ok(Seeds(seeds))
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Checkpoint directory written by `train --save-checkpoint`.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Defaults to the environment recorded in the checkpoint.
    #[arg(long)]
    env: Option<EnvKind>,
    #[arg(long, default_value_t = 3)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long, default_value = "pendulum")]
    env: EnvKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
    /// Candidate prior specs.
    #[arg(required = true)]
    priors: Vec<String>,
}

#[derive(Args, Debug)]
struct AggregateArgs {
    /// Record files; runs are grouped by the name before `__seed`.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Rolling window for train curves.
    #[arg(long, default_value_t = 100)]
    window: usize,
    #[arg(long, default_value = "curves")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, default_value = "pendulum")]
    env: EnvKind,
    #[arg(long, default_value = "expert")]
    prior: PriorSpec,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Train(args) => cmd_train(args),
        Cmd::Sweep(args) => cmd_sweep(args),
        Cmd::Eval(args) => cmd_eval(args),
        Cmd::ScoreCandidates(args) => cmd_score(args),
        Cmd::Aggregate(args) => cmd_aggregate(args),
        Cmd::ServePrior(args) => cmd_serve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut config = args.run.base_config()?;
    if let Some(prior) = args.prior {
        config.prior = prior;
    }
    if let Some(arm) = args.arm {
        arm.apply(&mut config)?;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(name) = args.name {
        config.name = name;
    }
    if let Some(v) = args.masking_aware {
        config.agent.masking_aware = v;
    }
    if let Some(v) = args.epsilon_masking {
        config.agent.epsilon_masking = v;
    }
    config.save_checkpoint |= args.save_checkpoint;
    args.run.apply(&mut config)?;
    config.validate()?;

    let out = args.out.unwrap_or_else(|| config.resolve_out_dir());
    let (path, outcome) = train_into(&config, &out)?;
    let record = &outcome.record;
    let final_eval = record.final_eval().map_or("n/a".to_string(), |v| format!("{v:.2}"));
    println!(
        "{}: {} steps, final eval {final_eval}, masked {:.3}, record {}",
        config.file_stem(),
        record.steps,
        record.masked_fraction(),
        path.display()
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let exe = std::env::current_exe().context("locating the camel executable")?;
    let jobs = args
        .jobs
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let mut pending: Vec<(String, Vec<String>)> = Vec::new();
    for arm in &args.arms {
        for seed in &args.seeds.0 {
            let mut argv = vec!["train".to_string(), "--arm".into(), arm.to_string(), "--seed".into(), seed.to_string()];
            if let Some(out) = &args.out {
                argv.push("--out".into());
                argv.push(out.display().to_string());
            }
            argv.extend(args.run.to_args());
            pending.push((format!("{arm}__seed{seed}"), argv));
        }
    }
    let total = pending.len();
    pending.reverse();
    let mut running: Vec<(String, Child)> = Vec::new();
    let mut failures = Vec::new();
    while !pending.is_empty() || !running.is_empty() {
        while running.len() < jobs {
            let Some((label, argv)) = pending.pop() else { break };
            let child = Command::new(&exe).args(&argv).spawn().with_context(|| format!("spawning {label}"))?;
            running.push((label, child));
        }
        let mut i = 0;
        while i < running.len() {
            match running[i].1.try_wait()? {
                Some(status) => {
                    let (label, _) = running.swap_remove(i);
                    if !status.success() {
                        failures.push(label);
                    }
                }
                None => i += 1,
            }
        }
        thread::sleep(Duration::from_millis(20));
    }
    println!("sweep: {} of {total} runs succeeded", total - failures.len());
    ensure!(failures.is_empty(), "failed runs: {}", failures.join(", "));
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let env = match args.env {
        Some(env) => env,
        None => match Agent::checkpoint_env(&args.checkpoint)? {
            Some(name) => name.parse()?,
            None => bail!("checkpoint does not record its environment; pass --env"),
        },
    };
    ensure!(args.episodes > 0, "--episodes must be positive");
    let agent = Agent::load(&args.checkpoint, &env.spec())?;
    let seeds = eval_seeds(args.seed, args.episodes);
    let mean = evaluate(&agent, env, &seeds);
    println!("{}", serde_json::json!({ "env": env.name(), "episodes": args.episodes, "seed": args.seed, "mean_return": mean }));
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let mut env = args.env.make();
    let mut scores = Vec::new();
    for text in &args.priors {
        let score = match text.parse::<PriorSpec>() {
            Err(e) => CandidateScore::failed(e.to_string()),
            Ok(spec) => match spec.build(args.env, args.seed) {
                Err(e) => CandidateScore::failed(e.to_string()),
                Ok(None) => CandidateScore::failed("`none` is not a policy"),
                Ok(Some(policy)) => {
                    let mut one = [policy];
                    let report = evaluate_candidates(env.as_mut(), &mut one, args.seed);
                    let [policy] = one;
                    let _ = policy.close();
                    report.candidates.into_iter().next().expect("one score")
                }
            },
        };
        scores.push(score);
    }
    let report = CandidateReport::from_scores(scores);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }
    println!("{:<4} {:>10} {:>5} {:>10} {:>10}  prior", "#", "return", "len", "mean|a|", "mean|da|");
    for (i, (c, text)) in report.candidates.iter().zip(&args.priors).enumerate() {
        let mark = if i == report.selected { "*" } else { " " };
        println!(
            "{mark}{i:<3} {:>10.2} {:>5} {:>10.4} {:>10.4}  {text}",
            c.episode_return, c.episode_length, c.mean_abs_action, c.mean_action_change
        );
        if let Some(e) = &c.error {
            println!("     error: {e}");
        }
    }
    println!("selected {}: {}", report.selected, args.priors[report.selected]);
    Ok(())
}

fn run_label(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    match stem.split_once("__seed") {
        Some((label, _)) => label.to_string(),
        None => stem,
    }
}

fn cmd_aggregate(args: AggregateArgs) -> Result<()> {
    let mut groups: BTreeMap<String, Vec<Vec<RecordRow>>> = BTreeMap::new();
    for file in &args.files {
        let rows = read_record(file)?;
        groups.entry(run_label(file)).or_default().push(rows);
    }
    std::fs::create_dir_all(&args.out)?;
    for (label, records) in &groups {
        for kind in [RowKind::Train, RowKind::Eval] {
            if records.iter().all(|rows| rows.iter().all(|r| r.kind != kind)) {
                continue;
            }
            let curve = aggregate(records, kind, args.window).with_context(|| format!("aggregating {label}"))?;
            let path = args.out.join(format!("{label}_{kind}.csv"));
            write_csv(&path, &curve)?;
            println!("{} ({} runs, {} points)", path.display(), records.len(), curve.t.len());
        }
    }
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> Result<()> {
    let spec = args.env.spec();
    let mut prior = args.prior.build(args.env, args.seed)?.context("`none` cannot be served")?;
    let stdin = io::stdin();
    let stdout = io::stdout();
    let policy = |obs: &[f64]| prior.act(obs, &spec).expect("hosted prior failed");
    serve(policy, spec.act_dim, stdin.lock(), stdout.lock())?;
    Ok(())
}
