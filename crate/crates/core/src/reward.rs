//! Stage reward laws applied to sampled outcomes.
//!
//! Stage 1 balances the batch between thinking and no-thinking modes with
//! soft penalty factors derived from the batch thinking proportion `z`.
//! Stage 2 passes the naive reward through untouched. Stage 3 modulates the
//! naive reward with a length term standardized within each
//! (group, correctness) cohort.
//!
//! All functions are pure and deterministic: identical inputs give
//! bit-identical outputs, and nothing here touches shared state.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used when checking that `z * batch_size` is an integer count.
const COUNT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("invalid batch stats: {0}")]
    InvalidBatchStats(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("outcomes span multiple groups (expected one rollout group)")]
    MixedGroup,
}

/// One sampled response: which mode it used, whether it was correct, and
/// how long it was.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    /// Whether the response engaged the thinking mode.
    pub think: bool,
    /// Whether the final answer was correct.
    pub correct: bool,
    /// Response length in tokens.
    pub length: u64,
    /// Identifier of the query whose rollout group this outcome belongs to.
    pub group_id: u64,
    /// Index of the sample within its group.
    pub sample_id: usize,
}

/// Proportion of thinking trajectories in a training batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub z: f64,
    pub batch_size: usize,
}

impl BatchStats {
    pub fn new(z: f64, batch_size: usize) -> Result<Self, RewardError> {
        if batch_size == 0 {
            return Err(RewardError::InvalidBatchStats(
                "batch_size must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&z) {
            return Err(RewardError::InvalidBatchStats(format!(
                "z={z} outside [0,1]"
            )));
        }
        let count = z * batch_size as f64;
        if (count - count.round()).abs() > COUNT_TOLERANCE {
            return Err(RewardError::InvalidBatchStats(format!(
                "z*batch_size = {count} is not an integral sample count"
            )));
        }
        Ok(Self { z, batch_size })
    }

    /// Batch statistics computed over a full post-rollout batch.
    pub fn from_outcomes(outcomes: &[Outcome]) -> Result<Self, RewardError> {
        if outcomes.is_empty() {
            return Err(RewardError::InvalidBatchStats("empty batch".into()));
        }
        let thinking = outcomes.iter().filter(|o| o.think).count();
        Self::new(thinking as f64 / outcomes.len() as f64, outcomes.len())
    }
}

/// Stage-1 balancing parameters: target ratio gamma in (0,1) and penalty
/// slope lambda >= 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage1Params {
    pub gamma: f64,
    pub lambda: f64,
}

impl Stage1Params {
    pub fn new(gamma: f64, lambda: f64) -> Result<Self, RewardError> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(RewardError::InvalidParams(format!(
                "gamma={gamma} outside (0,1)"
            )));
        }
        if !(lambda >= 0.0) {
            return Err(RewardError::InvalidParams(format!(
                "lambda={lambda} must be >= 0"
            )));
        }
        Ok(Self { gamma, lambda })
    }
}

/// Stage-3 shaping parameters: decay rate alpha for correct responses and
/// growth rate beta for incorrect ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage3Params {
    pub alpha: f64,
    pub beta: f64,
}

impl Stage3Params {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, RewardError> {
        if !(alpha >= 0.0) {
            return Err(RewardError::InvalidParams(format!(
                "alpha={alpha} must be >= 0"
            )));
        }
        if !(beta >= 0.0) {
            return Err(RewardError::InvalidParams(format!(
                "beta={beta} must be >= 0"
            )));
        }
        Ok(Self { alpha, beta })
    }
}

/// Length z-scored within its (group, correctness) cohort.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardizedLength {
    pub y: f64,
}

/// Soft penalty factors for the two modes, each clamped to [0,1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyFactors {
    pub think: f64,
    pub nothink: f64,
}

/// Naive reward: +1 think-correct, 0 think-incorrect, +2 nothink-correct,
/// -1 nothink-incorrect.
pub fn naive_reward(outcome: Outcome) -> f64 {
    match (outcome.think, outcome.correct) {
        (true, true) => 1.0,
        (true, false) => 0.0,
        (false, true) => 2.0,
        (false, false) => -1.0,
    }
}

/// Penalty factors pulling the batch thinking proportion toward gamma:
/// `delta_think = clamp((z - gamma) * lambda, 0, 1)` and
/// `delta_nothink = clamp((1 - z - gamma) * lambda, 0, 1)`.
pub fn penalty_factors(stats: &BatchStats, params: &Stage1Params) -> PenaltyFactors {
    PenaltyFactors {
        think: ((stats.z - params.gamma) * params.lambda).clamp(0.0, 1.0),
        nothink: ((1.0 - stats.z - params.gamma) * params.lambda).clamp(0.0, 1.0),
    }
}

/// Stage-1 batch-balanced reward.
pub fn stage1_reward(outcome: Outcome, stats: &BatchStats, params: &Stage1Params) -> f64 {
    stage1_reward_with_factors(outcome, &penalty_factors(stats, params))
}

/// Stage-1 reward given precomputed penalty factors. The four-case law
/// interpolates the naive reward toward an anchor value of -1 for
/// think-incorrect and -2 for nothink-incorrect samples.
pub fn stage1_reward_with_factors(outcome: Outcome, factors: &PenaltyFactors) -> f64 {
    let naive = naive_reward(outcome);
    match (outcome.think, outcome.correct) {
        (true, true) => (1.0 - factors.think) * naive,
        (true, false) => (1.0 - factors.think) * naive + factors.think * -1.0,
        (false, true) => (1.0 - factors.nothink) * naive,
        (false, false) => (1.0 - factors.nothink) * naive + factors.nothink * -2.0,
    }
}

/// Stage-2 reward: the naive reward, unmodified.
pub fn stage2_reward(outcome: Outcome) -> f64 {
    naive_reward(outcome)
}

/// Standardize response lengths within one rollout group, separately for
/// the correct and incorrect cohorts. Cohorts of size 1 and cohorts with
/// zero spread yield y = 0 for all members.
pub fn standardize_lengths(outcomes: &[Outcome]) -> Result<Vec<StandardizedLength>, RewardError> {
    if outcomes.is_empty() {
        return Ok(Vec::new());
    }
    let group = outcomes[0].group_id;
    if outcomes.iter().any(|o| o.group_id != group) {
        return Err(RewardError::MixedGroup);
    }

    let mut ys = vec![StandardizedLength { y: 0.0 }; outcomes.len()];
    for correct in [true, false] {
        let idx: Vec<usize> = (0..outcomes.len())
            .filter(|&i| outcomes[i].correct == correct)
            .collect();
        if idx.len() < 2 {
            continue;
        }
        let lengths: Vec<f64> = idx.iter().map(|&i| outcomes[i].length as f64).collect();
        let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
        let var = lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / lengths.len() as f64;
        let std = var.sqrt();
        if std == 0.0 {
            continue;
        }
        for (&i, &l) in idx.iter().zip(&lengths) {
            ys[i] = StandardizedLength {
                y: (l - mean) / std,
            };
        }
    }
    Ok(ys)
}

/// Stage-3 length-aware reward: correct responses decay with standardized
/// length, incorrect ones grow with it.
pub fn stage3_reward(outcome: Outcome, y: StandardizedLength, params: &Stage3Params) -> f64 {
    let naive = naive_reward(outcome);
    if outcome.correct {
        naive + (-1.0 + (-params.alpha * y.y).exp())
    } else {
        naive + (1.0 - (-params.beta * y.y).exp())
    }
}
