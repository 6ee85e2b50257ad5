//! Group-relative advantage estimation and the clipped policy objective.
//!
//! Advantages are computed by z-scoring rewards within each rollout group
//! (mean-only centering is available as a variant). The objective is the
//! clipped importance-weighted sum over all decisions, normalized by the
//! total decision count across the batch. For the surrogate policy the
//! gradient is available in closed form from the Bernoulli and categorical
//! score functions.
//!
//! Advantage and objective computations are pure and thread-safe;
//! `policy_gradient_step` takes the policy by reference and returns the
//! updated copy, so the caller owns update ordering.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{DecisionRecord, SurrogatePolicy};

/// Numerical floor added to the group standard deviation before dividing.
pub const ADVANTAGE_EPS: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum GrpoError {
    #[error("degenerate group: need at least 2 samples, got {0}")]
    DegenerateGroup(usize),
    #[error("invalid importance ratio: {0}")]
    InvalidRatio(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("diverged: non-finite gradient")]
    Diverged,
}

/// How group rewards are turned into advantages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvantageMode {
    /// Center by the group mean and divide by the group standard deviation.
    #[default]
    ZScore,
    /// Center by the group mean only.
    MeanOnly,
}

/// Per-sample advantages for one group, broadcast to every decision of the
/// sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageSet {
    pub advantages: Vec<f64>,
}

/// Clip range for the importance ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipConfig {
    pub epsilon: f64,
}

impl Default for ClipConfig {
    fn default() -> Self {
        Self { epsilon: 0.2 }
    }
}

impl ClipConfig {
    pub fn new(epsilon: f64) -> Result<Self, GrpoError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(GrpoError::ShapeMismatch(format!(
                "epsilon={epsilon} outside (0,1)"
            )));
        }
        Ok(Self { epsilon })
    }
}

/// All rollouts for one query: final adjusted rewards, the recorded
/// log-probabilities under the sampling policy, and the decisions
/// themselves so the objective can be re-evaluated under new parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub query_id: u64,
    pub rewards: Vec<f64>,
    pub decision_logprobs_old: Vec<Vec<f64>>,
    pub decisions: Vec<DecisionRecord>,
}

impl RolloutGroup {
    pub fn group_size(&self) -> usize {
        self.rewards.len()
    }

    pub fn decision_count(&self, sample: usize) -> usize {
        self.decision_logprobs_old[sample].len()
    }

    pub fn total_decisions(&self) -> usize {
        self.decision_logprobs_old.iter().map(Vec::len).sum()
    }

    pub fn validate(&self) -> Result<(), GrpoError> {
        let g = self.rewards.len();
        if g < 2 {
            return Err(GrpoError::DegenerateGroup(g));
        }
        if self.decision_logprobs_old.len() != g || self.decisions.len() != g {
            return Err(GrpoError::ShapeMismatch(format!(
                "group {}: rewards/logprobs/decisions lengths disagree",
                self.query_id
            )));
        }
        for (lp, d) in self.decision_logprobs_old.iter().zip(&self.decisions) {
            let expected = if d.think { 2 } else { 1 };
            if lp.len() != expected {
                return Err(GrpoError::ShapeMismatch(format!(
                    "group {}: decision count {} does not match mode",
                    self.query_id,
                    lp.len()
                )));
            }
        }
        Ok(())
    }
}

/// Group-normalized advantages with the default z-scoring.
pub fn group_advantage(rewards: &[f64]) -> Result<AdvantageSet, GrpoError> {
    group_advantage_with_mode(rewards, AdvantageMode::ZScore)
}

pub fn group_advantage_with_mode(
    rewards: &[f64],
    mode: AdvantageMode,
) -> Result<AdvantageSet, GrpoError> {
    if rewards.len() < 2 {
        return Err(GrpoError::DegenerateGroup(rewards.len()));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let advantages = match mode {
        AdvantageMode::MeanOnly => rewards.iter().map(|r| r - mean).collect(),
        AdvantageMode::ZScore => {
            let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
            let denom = var.sqrt() + ADVANTAGE_EPS;
            rewards.iter().map(|r| (r - mean) / denom).collect()
        }
    };
    Ok(AdvantageSet { advantages })
}

/// The clipped surrogate term for one decision:
/// `min(ratio * A, clamp(ratio, 1 - eps, 1 + eps) * A)`.
pub fn clipped_objective(ratio: f64, advantage: f64, cfg: &ClipConfig) -> Result<f64, GrpoError> {
    if !(ratio > 0.0) {
        return Err(GrpoError::InvalidRatio(ratio));
    }
    let clipped = ratio.clamp(1.0 - cfg.epsilon, 1.0 + cfg.epsilon);
    Ok((ratio * advantage).min(clipped * advantage))
}

/// Token-normalized clipped objective over a batch of groups. `new_logprobs`
/// mirrors the shape of the recorded old log-probabilities; per-decision
/// ratios are `exp(new - old)`.
pub fn batch_objective(
    groups: &[RolloutGroup],
    new_logprobs: &[Vec<Vec<f64>>],
    advantages: &[AdvantageSet],
    cfg: &ClipConfig,
) -> Result<f64, GrpoError> {
    if groups.len() != new_logprobs.len() || groups.len() != advantages.len() {
        return Err(GrpoError::ShapeMismatch("group count mismatch".into()));
    }
    let mut total = 0.0;
    let mut decisions = 0usize;
    for ((group, new_lp), adv) in groups.iter().zip(new_logprobs).zip(advantages) {
        group.validate()?;
        if new_lp.len() != group.group_size() || adv.advantages.len() != group.group_size() {
            return Err(GrpoError::ShapeMismatch(format!(
                "group {}: new logprobs or advantages shape mismatch",
                group.query_id
            )));
        }
        for (i, sample_new) in new_lp.iter().enumerate() {
            let sample_old = &group.decision_logprobs_old[i];
            if sample_new.len() != sample_old.len() {
                return Err(GrpoError::ShapeMismatch(format!(
                    "group {} sample {}: decision count mismatch",
                    group.query_id, i
                )));
            }
            for (new, old) in sample_new.iter().zip(sample_old) {
                let ratio = (new - old).exp();
                total += clipped_objective(ratio, adv.advantages[i], cfg)?;
                decisions += 1;
            }
        }
    }
    if decisions == 0 {
        return Err(GrpoError::ShapeMismatch("batch has no decisions".into()));
    }
    Ok(total / decisions as f64)
}

/// Evaluate the batch objective with the new log-probabilities recomputed
/// from `policy` for the recorded decisions.
pub fn batch_objective_for_policy(
    policy: &SurrogatePolicy,
    groups: &[RolloutGroup],
    advantages: &[AdvantageSet],
    cfg: &ClipConfig,
) -> Result<f64, GrpoError> {
    let new_logprobs = policy_logprobs(policy, groups)?;
    batch_objective(groups, &new_logprobs, advantages, cfg)
}

/// Re-evaluate every recorded decision under `policy`, mirroring the shape
/// of the recorded old log-probabilities.
pub fn policy_logprobs(
    policy: &SurrogatePolicy,
    groups: &[RolloutGroup],
) -> Result<Vec<Vec<Vec<f64>>>, GrpoError> {
    groups
        .iter()
        .map(|group| {
            group.validate()?;
            group
                .decisions
                .iter()
                .map(|d| {
                    if d.bucket >= policy.buckets() {
                        return Err(GrpoError::ShapeMismatch(format!(
                            "bucket {} outside policy with {} buckets",
                            d.bucket,
                            policy.buckets()
                        )));
                    }
                    if let Some(bin) = d.length_bin {
                        if bin >= policy.bins() {
                            return Err(GrpoError::ShapeMismatch(format!(
                                "length bin {} outside policy with {} bins",
                                bin,
                                policy.bins()
                            )));
                        }
                    }
                    Ok(policy.decision_logprobs(d))
                })
                .collect()
        })
        .collect()
}

/// Gradient of the batch objective with respect to the policy logits.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGradient {
    pub think: Vec<f64>,
    pub length: Vec<Vec<f64>>,
}

impl PolicyGradient {
    fn zeros(policy: &SurrogatePolicy) -> Self {
        Self {
            think: vec![0.0; policy.buckets()],
            length: vec![vec![0.0; policy.bins()]; policy.buckets()],
        }
    }

    pub fn all_finite(&self) -> bool {
        self.think.iter().all(|v| v.is_finite())
            && self.length.iter().flatten().all(|v| v.is_finite())
    }
}

/// Objective value and analytic gradient at `policy`.
///
/// Each decision contributes `A * ratio * d(logprob)/d(theta)` when the
/// unclipped branch of the min is active and zero when the clip binds
/// (the standard subgradient choice at the boundary).
pub fn objective_and_gradient(
    policy: &SurrogatePolicy,
    groups: &[RolloutGroup],
    advantages: &[AdvantageSet],
    cfg: &ClipConfig,
) -> Result<(f64, PolicyGradient), GrpoError> {
    if groups.len() != advantages.len() {
        return Err(GrpoError::ShapeMismatch("group count mismatch".into()));
    }
    let mut grad = PolicyGradient::zeros(policy);
    let mut total = 0.0;
    let mut decisions = 0usize;

    for (group, adv) in groups.iter().zip(advantages) {
        group.validate()?;
        if adv.advantages.len() != group.group_size() {
            return Err(GrpoError::ShapeMismatch(format!(
                "group {}: advantage count mismatch",
                group.query_id
            )));
        }
        for (i, decision) in group.decisions.iter().enumerate() {
            let a = adv.advantages[i];
            let new_lp = policy.decision_logprobs(decision);
            let old_lp = &group.decision_logprobs_old[i];
            if new_lp.len() != old_lp.len() {
                return Err(GrpoError::ShapeMismatch(format!(
                    "group {} sample {}: decision count mismatch",
                    group.query_id, i
                )));
            }
            for (t, (new, old)) in new_lp.iter().zip(old_lp).enumerate() {
                let ratio = (new - old).exp();
                if !(ratio > 0.0) {
                    return Err(GrpoError::InvalidRatio(ratio));
                }
                let clipped = ratio.clamp(1.0 - cfg.epsilon, 1.0 + cfg.epsilon);
                let unclipped_value = ratio * a;
                let clipped_value = clipped * a;
                total += unclipped_value.min(clipped_value);
                decisions += 1;
                if unclipped_value <= clipped_value {
                    let scale = a * ratio;
                    if t == 0 {
                        // Bernoulli score: indicator minus the mode probability.
                        let p = policy.think_prob(decision.bucket);
                        let m = if decision.think { 1.0 } else { 0.0 };
                        grad.think[decision.bucket] += scale * (m - p);
                    } else {
                        // Categorical score: one-hot minus the softmax.
                        let bin = decision
                            .length_bin
                            .expect("second decision implies a length bin");
                        let probs = policy.bin_probs(decision.bucket);
                        for (k, p) in probs.iter().enumerate() {
                            let onehot = if k == bin { 1.0 } else { 0.0 };
                            grad.length[decision.bucket][k] += scale * (onehot - p);
                        }
                    }
                }
            }
        }
    }
    if decisions == 0 {
        return Err(GrpoError::ShapeMismatch("batch has no decisions".into()));
    }
    let inv = 1.0 / decisions as f64;
    for v in grad.think.iter_mut() {
        *v *= inv;
    }
    for row in grad.length.iter_mut() {
        for v in row.iter_mut() {
            *v *= inv;
        }
    }
    if !grad.all_finite() {
        return Err(GrpoError::Diverged);
    }
    Ok((total * inv, grad))
}

/// One ascent step on the batch objective: `theta' = theta + lr * grad`.
pub fn policy_gradient_step(
    policy: &SurrogatePolicy,
    groups: &[RolloutGroup],
    advantages: &[AdvantageSet],
    cfg: &ClipConfig,
    learning_rate: f64,
) -> Result<SurrogatePolicy, GrpoError> {
    if !(learning_rate > 0.0) {
        return Err(GrpoError::ShapeMismatch(format!(
            "learning_rate={learning_rate} must be positive"
        )));
    }
    let (_, grad) = objective_and_gradient(policy, groups, advantages, cfg)?;
    let mut updated = policy.clone();
    let think_delta: Vec<f64> = grad.think.iter().map(|g| learning_rate * g).collect();
    let length_delta: Vec<Vec<f64>> = grad
        .length
        .iter()
        .map(|row| row.iter().map(|g| learning_rate * g).collect())
        .collect();
    updated.nudge(&think_delta, &length_delta);
    if !updated.all_finite() {
        return Err(GrpoError::Diverged);
    }
    Ok(updated)
}
