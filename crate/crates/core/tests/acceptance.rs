//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use camel::harness::{run, train_into, Arm, RunConfig, RunOutcome};
use camel::masking::{action_mapping, ActionBounds, EpsilonSchedule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const THRESHOLD: f64 = -250.0;
const STEPS: u64 = 30_000;

struct Verdict {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(name: &'static str, pass: bool, detail: String) -> Verdict {
    let line = format!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    println!("{line}");
    Verdict { name, pass, detail }
}

fn arm_config(arm: Arm, seed: u64) -> RunConfig {
    let mut config = RunConfig { seed, total_steps: Some(STEPS), ..Default::default() };
    arm.apply(&mut config).expect("arm applies");
    config
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Steps to threshold, counting a run that never gets there as infinitely slow.
fn steps_to(outcome: &RunOutcome) -> f64 {
    outcome.record.steps_to_threshold(THRESHOLD).map_or(f64::INFINITY, |t| t as f64)
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| if x.is_finite() { format!("{x:.0}") } else { "never".into() }).collect();
    format!("[{}]", parts.join(", "))
}

fn gradient_oracle() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let worst = (0..100).map(|_| common::gradient_oracle_case(&mut rng)).fold(0.0, f64::max);
    let elapsed = started.elapsed();
    verdict(
        "gradient oracle",
        worst <= 1e-4 && elapsed < Duration::from_secs(10),
        format!("100 cases, max relative error {worst:.2e} (<= 1e-4), {elapsed:.2?} (< 10 s)"),
    )
}

fn mapping_identities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let d = rng.random_range(1..=4);
        let (mut lower, mut upper) = (Vec::new(), Vec::new());
        for _ in 0..d {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            lower.push(a.min(b));
            upper.push(a.max(b) + 1e-3);
        }
        let bounds = ActionBounds { lower, upper };
        let lo = action_mapping(&vec![-1.0; d], &bounds);
        let hi = action_mapping(&vec![1.0; d], &bounds);
        let mid = action_mapping(&vec![0.0; d], &bounds);
        for i in 0..d {
            worst = worst
                .max((lo[i] - bounds.lower[i]).abs())
                .max((hi[i] - bounds.upper[i]).abs())
                .max((mid[i] - (bounds.lower[i] + bounds.upper[i]) / 2.0).abs());
        }
    }
    let full = ActionBounds { lower: vec![-1.0; 3], upper: vec![1.0; 3] };
    let identity = (0..10_000).all(|_| {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..=1.0)).collect();
        action_mapping(&x, &full) == x
    });
    verdict(
        "mapping identities",
        worst <= 1e-12 && identity,
        format!("endpoint/midpoint max error {worst:.1e} over 10^4 windows (<= 1e-12); full-window identity exact: {identity}"),
    )
}

fn schedule_exactness() -> Verdict {
    let (fm, total) = (0.2, STEPS);
    let schedule = EpsilonSchedule::new(fm, total).expect("valid schedule");
    let worst = (0..100u64)
        .map(|i| {
            let t = i * total / 99;
            let expected = f64::max(1.0 - t as f64 / (fm * total as f64), 0.0);
            (schedule.epsilon_at(t) - expected).abs()
        })
        .fold(0.0, f64::max);
    verdict("schedule exactness", worst <= 1e-12, format!("100 probes, f_m = 0.2, T = {total}, max error {worst:.1e}"))
}

fn containment() -> Verdict {
    let config = RunConfig { total_steps: Some(10_000), ..arm_config(Arm::CamelExpert, 1) };
    let outcome = run(&config).expect("containment run");
    let stored = outcome.buffer.iter().filter(|t| !t.bounds.contains(&t.a)).count();
    let masked = outcome.record.masked_steps;
    verdict(
        "containment",
        outcome.record.bound_violations == 0 && stored == 0 && masked > 0,
        format!(
            "10^4-step CAMEL run, {masked} masked steps, {} violations at execution, {stored} in the buffer",
            outcome.record.bound_violations
        ),
    )
}

fn degeneracy(baseline: &RunOutcome, config: &RunConfig) -> Verdict {
    let reference = common::reference::plain_td3(config);
    let same_steps = baseline.buffer.len() == reference.steps.len()
        && baseline
            .buffer
            .iter()
            .zip(&reference.steps)
            .all(|(a, b)| a.s == b.s && a.a == b.a && a.r == b.r && a.s_next == b.s_next && a.terminal == b.terminal);
    let same_nets = baseline.agent.actor == reference.actor
        && baseline.agent.critic1 == reference.critic1
        && baseline.agent.critic2 == reference.critic2
        && baseline.agent.actor_target == reference.actor_target;
    verdict(
        "ablation degeneracy",
        same_steps && same_nets,
        format!(
            "baseline seed {} vs bounds-free TD3 over {} steps: trajectories identical {same_steps}, final networks identical {same_nets}",
            config.seed,
            reference.steps.len()
        ),
    )
}

fn determinism() -> Verdict {
    let configs = [
        RunConfig { total_steps: Some(5000), ..arm_config(Arm::CamelRandom, 9) },
        RunConfig { total_steps: Some(5000), ..arm_config(Arm::Baseline, 9) },
    ];
    let mut identical = true;
    for config in &configs {
        let a = tempfile::tempdir().expect("tempdir");
        let b = tempfile::tempdir().expect("tempdir");
        let (pa, _) = train_into(config, a.path()).expect("first run");
        let (pb, _) = train_into(config, b.path()).expect("second run");
        identical &= std::fs::read(pa).expect("record") == std::fs::read(pb).expect("record");
    }
    verdict("determinism", identical, "camel-random and baseline, seed 9, 5000 steps, record files byte-identical".into())
}

fn timed_run(config: &RunConfig) -> (RunOutcome, Duration) {
    let started = Instant::now();
    let outcome = run(config).unwrap_or_else(|e| panic!("{} seed {}: {e}", config.name, config.seed));
    (outcome, started.elapsed())
}

fn main() {
    let mut verdicts = vec![gradient_oracle(), mapping_identities(), schedule_exactness(), containment()];

    let mut baseline = Vec::new();
    let mut slowest = Duration::ZERO;
    for seed in SEEDS {
        let (outcome, elapsed) = timed_run(&arm_config(Arm::Baseline, seed));
        slowest = slowest.max(elapsed);
        baseline.push(outcome);
    }
    let base_steps: Vec<f64> = baseline.iter().map(steps_to).collect();
    let reached = base_steps.iter().filter(|s| s.is_finite()).count();
    verdicts.push(verdict(
        "baseline sanity",
        reached >= 4 && slowest <= Duration::from_secs(300),
        format!(
            "{reached}/5 seeds reach {THRESHOLD} within {STEPS} steps, steps {}, slowest run {slowest:.1?}",
            fmt_list(&base_steps)
        ),
    ));

    let expert_steps: Vec<f64> = SEEDS
        .iter()
        .map(|&seed| {
            let config = RunConfig { stop_at_eval: Some(THRESHOLD), ..arm_config(Arm::CamelExpert, seed) };
            steps_to(&timed_run(&config).0)
        })
        .collect();
    let (m_expert, m_base) = (median(expert_steps.clone()), median(base_steps.clone()));
    verdicts.push(verdict(
        "sample efficiency (expert prior)",
        m_expert <= 0.7 * m_base,
        format!(
            "median steps to {THRESHOLD}: expert {m_expert} vs baseline {m_base} (ratio {:.2}, need <= 0.70); expert {}",
            m_expert / m_base,
            fmt_list(&expert_steps)
        ),
    ));

    let base_final: Vec<f64> = baseline.iter().map(|o| o.record.final_eval().expect("eval rows")).collect();
    let random_final: Vec<f64> = SEEDS
        .iter()
        .map(|&seed| timed_run(&arm_config(Arm::CamelRandom, seed)).0.record.final_eval().expect("eval rows"))
        .collect();
    let (m_random, m_base_final) = (median(random_final.clone()), median(base_final.clone()));
    verdicts.push(verdict(
        "robustness (random prior, MA+EM)",
        (m_random - m_base_final).abs() <= 100.0,
        format!(
            "median final eval: random-prior CAMEL {m_random:.1} vs baseline {m_base_final:.1} (gap {:.1}, need <= 100)",
            (m_random - m_base_final).abs()
        ),
    ));

    let blind_steps: Vec<f64> = SEEDS
        .iter()
        .map(|&seed| {
            let config = RunConfig { stop_at_eval: Some(THRESHOLD), ..arm_config(Arm::RandomNoMaEm, seed) };
            steps_to(&timed_run(&config).0)
        })
        .collect();
    let failed = blind_steps.iter().filter(|s| !s.is_finite()).count();
    verdicts.push(verdict(
        "failure (random prior, no MA/EM)",
        failed >= 4,
        format!("{failed}/5 seeds never reach {THRESHOLD} in {STEPS} steps, steps {}", fmt_list(&blind_steps)),
    ));

    verdicts.push(degeneracy(&baseline[0], &arm_config(Arm::Baseline, SEEDS[0])));
    verdicts.push(determinism());

    let failed: Vec<&Verdict> = verdicts.iter().filter(|v| !v.pass).collect();
    println!("acceptance: {}/{} criteria passed", verdicts.len() - failed.len(), verdicts.len());
    if !failed.is_empty() {
        for v in &failed {
            eprintln!("failed: {} ({})", v.name, v.detail);
        }
        std::process::exit(1);
    }
}
