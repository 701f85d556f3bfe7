//! Single-episode scoring of candidate priors.

use serde::Serialize;

use super::PriorPolicy;
use crate::env::Env;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CandidateScore {
    /// Episode return, or negative infinity if the candidate failed.
    pub episode_return: f64,
    pub episode_length: usize,
    pub mean_abs_action: f64,
    /// Mean absolute per-dimension change between consecutive actions.
    pub mean_action_change: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CandidateReport {
    pub candidates: Vec<CandidateScore>,
    pub selected: usize,
}

impl CandidateScore {
    /// Score of a candidate that could not be run at all.
    pub fn failed(error: impl Into<String>) -> Self {
        CandidateScore {
            episode_return: f64::NEG_INFINITY,
            episode_length: 0,
            mean_abs_action: f64::NAN,
            mean_action_change: f64::NAN,
            error: Some(error.into()),
        }
    }
}

impl CandidateReport {
    /// Apply the selection rule to precomputed scores.
    pub fn from_scores(candidates: Vec<CandidateScore>) -> Self {
        assert!(!candidates.is_empty(), "at least one candidate");
        let selected = select(&candidates);
        CandidateReport { candidates, selected }
    }
}

fn score(env: &mut dyn Env, policy: &mut PriorPolicy, seed: u64) -> CandidateScore {
    let spec = env.spec().clone();
    let mut obs = env.reset(seed);
    let (mut ret, mut len, mut abs_sum, mut change_sum) = (0.0, 0usize, 0.0, 0.0);
    let mut previous: Option<Vec<f64>> = None;
    let failed = |len, error: String| CandidateScore { episode_length: len, ..CandidateScore::failed(error) };
    loop {
        let action = match policy.act(&obs, &spec) {
            Ok(a) => a,
            Err(e) => return failed(len, e.to_string()),
        };
        let step = match env.step(&action) {
            Ok(s) => s,
            Err(e) => return failed(len, e.to_string()),
        };
        let dim = action.len() as f64;
        abs_sum += action.iter().map(|a| a.abs()).sum::<f64>() / dim;
        if let Some(prev) = &previous {
            change_sum += action.iter().zip(prev).map(|(a, b)| (a - b).abs()).sum::<f64>() / dim;
        }
        previous = Some(action);
        ret += step.reward;
        len += 1;
        if step.done() {
            break;
        }
        obs = step.next_obs;
    }
    CandidateScore {
        episode_return: ret,
        episode_length: len,
        mean_abs_action: abs_sum / len as f64,
        mean_action_change: if len > 1 { change_sum / (len - 1) as f64 } else { 0.0 },
        error: None,
    }
}

/// Run every candidate for one episode from the same seed and pick the one
/// with the highest return. Ties go to the smoother candidate (lower mean
/// action change), then to the lower index. A failing candidate scores
/// negative infinity and the others still run.
pub fn evaluate_candidates(env: &mut dyn Env, policies: &mut [PriorPolicy], seed: u64) -> CandidateReport {
    assert!(!policies.is_empty(), "at least one candidate");
    CandidateReport::from_scores(policies.iter_mut().map(|p| score(env, p, seed)).collect())
}

fn select(candidates: &[CandidateScore]) -> usize {
    let mut selected = 0;
    for (i, c) in candidates.iter().enumerate().skip(1) {
        let best = &candidates[selected];
        let smoother = c.mean_action_change < best.mean_action_change;
        if c.episode_return > best.episode_return || (c.episode_return == best.episode_return && smoother) {
            selected = i;
        }
    }
    selected
}
