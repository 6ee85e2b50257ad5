//! Synthetic reasoning environment and the parametric surrogate policy.
//!
//! The environment stands in for a reasoning LLM on a math corpus. Each
//! problem has a difficulty in [0,1]; correctness probabilities fall off
//! linearly with difficulty, faster for the no-thinking mode, so explicit
//! thinking pays off more on harder problems. The surrogate policy makes
//! one or two discrete decisions per trajectory: a Bernoulli mode choice
//! per difficulty bucket and, when thinking, a categorical choice over
//! length bins.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reward::Outcome;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("invalid environment parameters: {0}")]
    InvalidParams(String),
}

/// One sampled problem: a difficulty and the bucket it falls into.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub difficulty: f64,
    pub bucket: usize,
}

impl ProblemSpec {
    /// Bucket index is `floor(difficulty * buckets)`, clamped to the top
    /// bucket so difficulty 1.0 stays in range.
    pub fn new(difficulty: f64, buckets: usize) -> Self {
        let bucket = ((difficulty * buckets as f64).floor() as usize).min(buckets - 1);
        Self { difficulty, bucket }
    }
}

/// Environment calibration: error slopes per mode, base token lengths, and
/// multiplicative length noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvParams {
    pub kappa_think: f64,
    pub kappa_nothink: f64,
    pub base_len_think: u64,
    pub base_len_nothink: u64,
    pub len_spread: f64,
}

impl Default for EnvParams {
    fn default() -> Self {
        Self {
            kappa_think: 0.6,
            kappa_nothink: 1.4,
            base_len_think: 3000,
            base_len_nothink: 600,
            len_spread: 0.25,
        }
    }
}

impl EnvParams {
    /// The premise of the environment: thinking must degrade more slowly
    /// with difficulty than answering directly.
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.kappa_think >= 0.0 && self.kappa_nothink >= 0.0) {
            return Err(EnvError::InvalidParams("kappa slopes must be >= 0".into()));
        }
        if !(self.kappa_nothink > self.kappa_think) {
            return Err(EnvError::InvalidParams(format!(
                "kappa_nothink={} must exceed kappa_think={}",
                self.kappa_nothink, self.kappa_think
            )));
        }
        if self.base_len_think == 0 || self.base_len_nothink == 0 {
            return Err(EnvError::InvalidParams(
                "base lengths must be positive".into(),
            ));
        }
        if !(self.len_spread >= 0.0) {
            return Err(EnvError::InvalidParams("len_spread must be >= 0".into()));
        }
        Ok(())
    }

    /// Probability of a correct answer at difficulty `d` for the given mode:
    /// `clamp(1 - kappa * d, 0, 1)`.
    pub fn p_correct(&self, think: bool, d: f64) -> f64 {
        let kappa = if think {
            self.kappa_think
        } else {
            self.kappa_nothink
        };
        (1.0 - kappa * d).clamp(0.0, 1.0)
    }
}

/// Difficulty sampling range; uniform on [low, high].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DifficultyRange {
    pub low: f64,
    pub high: f64,
}

impl Default for DifficultyRange {
    fn default() -> Self {
        Self {
            low: 0.0,
            high: 1.0,
        }
    }
}

impl DifficultyRange {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(0.0 <= self.low && self.low < self.high && self.high <= 1.0) {
            return Err(EnvError::InvalidParams(format!(
                "difficulty range [{}, {}] must satisfy 0 <= low < high <= 1",
                self.low, self.high
            )));
        }
        Ok(())
    }
}

/// Shape of the surrogate decision space: bucket count, length-bin
/// multipliers applied to the thinking base length, the difficulty
/// sampling range, and the initial mode logit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateConfig {
    pub buckets: usize,
    pub length_bin_multipliers: Vec<f64>,
    pub difficulty: DifficultyRange,
    pub init_think_logit: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            // Bin centers at the default thinking base length of 3000 come
            // out to {1500, 3000, 6000, 12000} tokens.
            buckets: 8,
            length_bin_multipliers: vec![0.5, 1.0, 2.0, 4.0],
            difficulty: DifficultyRange::default(),
            init_think_logit: 0.0,
        }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.buckets == 0 {
            return Err(EnvError::InvalidParams("buckets must be positive".into()));
        }
        if self.length_bin_multipliers.is_empty() {
            return Err(EnvError::InvalidParams(
                "need at least one length bin".into(),
            ));
        }
        if self.length_bin_multipliers.iter().any(|m| !(*m > 0.0)) {
            return Err(EnvError::InvalidParams(
                "length bin multipliers must be positive".into(),
            ));
        }
        if !self.init_think_logit.is_finite() {
            return Err(EnvError::InvalidParams(
                "init_think_logit must be finite".into(),
            ));
        }
        self.difficulty.validate()
    }

    pub fn bins(&self) -> usize {
        self.length_bin_multipliers.len()
    }
}

/// The two discrete decisions a trajectory can record: the bucket it was
/// made in, the mode choice, and the length bin when thinking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub bucket: usize,
    pub think: bool,
    pub length_bin: Option<usize>,
}

/// Per-bucket mode logits and per-bucket categorical length-bin logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogatePolicy {
    think_logits: Vec<f64>,
    length_logits: Vec<Vec<f64>>,
}

impl SurrogatePolicy {
    pub fn new(cfg: &SurrogateConfig) -> Self {
        Self {
            think_logits: vec![cfg.init_think_logit; cfg.buckets],
            length_logits: vec![vec![0.0; cfg.bins()]; cfg.buckets],
        }
    }

    pub fn from_parts(think_logits: Vec<f64>, length_logits: Vec<Vec<f64>>) -> Self {
        Self {
            think_logits,
            length_logits,
        }
    }

    pub fn buckets(&self) -> usize {
        self.think_logits.len()
    }

    pub fn bins(&self) -> usize {
        self.length_logits.first().map_or(0, Vec::len)
    }

    pub fn think_logits(&self) -> &[f64] {
        &self.think_logits
    }

    pub fn length_logits(&self) -> &[Vec<f64>] {
        &self.length_logits
    }

    /// Probability of choosing the thinking mode in `bucket`.
    pub fn think_prob(&self, bucket: usize) -> f64 {
        sigmoid(self.think_logits[bucket])
    }

    /// Softmax over length bins in `bucket`.
    pub fn bin_probs(&self, bucket: usize) -> Vec<f64> {
        softmax(&self.length_logits[bucket])
    }

    /// Log-density of the recorded decisions under this policy, in decision
    /// order (mode first, then the length bin when present).
    pub fn decision_logprobs(&self, decision: &DecisionRecord) -> Vec<f64> {
        let logit = self.think_logits[decision.bucket];
        let mode_lp = if decision.think {
            -softplus(-logit)
        } else {
            -softplus(logit)
        };
        match decision.length_bin {
            Some(bin) => {
                let logits = &self.length_logits[decision.bucket];
                vec![mode_lp, logits[bin] - log_sum_exp(logits)]
            }
            None => vec![mode_lp],
        }
    }

    pub fn all_finite(&self) -> bool {
        self.think_logits.iter().all(|v| v.is_finite())
            && self.length_logits.iter().flatten().all(|v| v.is_finite())
    }

    pub fn nudge(&mut self, think_delta: &[f64], length_delta: &[Vec<f64>]) {
        for (l, d) in self.think_logits.iter_mut().zip(think_delta) {
            *l += d;
        }
        for (row, drow) in self.length_logits.iter_mut().zip(length_delta) {
            for (l, d) in row.iter_mut().zip(drow) {
                *l += d;
            }
        }
    }
}

/// One sampled trajectory: the problem, the resulting outcome, and the
/// log-probabilities of the decisions that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub problem: ProblemSpec,
    pub outcome: Outcome,
    pub decision_logprobs: Vec<f64>,
    pub length_bin: Option<usize>,
}

impl Trajectory {
    pub fn mode_chosen(&self) -> bool {
        self.outcome.think
    }

    pub fn decision_record(&self) -> DecisionRecord {
        DecisionRecord {
            bucket: self.problem.bucket,
            think: self.outcome.think,
            length_bin: self.length_bin,
        }
    }
}

/// Draw one problem with difficulty uniform on the configured range.
pub fn sample_problem<R: Rng>(rng: &mut R, range: &DifficultyRange, buckets: usize) -> ProblemSpec {
    let d = range.low + (range.high - range.low) * rng.random::<f64>();
    ProblemSpec::new(d, buckets)
}

/// Sample one trajectory from the surrogate policy in the environment.
///
/// Draw order is fixed (mode, length bin, correctness, length noise) so a
/// given RNG stream always produces the same trajectory.
pub fn rollout<R: Rng>(
    policy: &SurrogatePolicy,
    problem: &ProblemSpec,
    env: &EnvParams,
    cfg: &SurrogateConfig,
    rng: &mut R,
    group_id: u64,
    sample_id: usize,
) -> Trajectory {
    let bucket = problem.bucket;
    let think = rng.random::<f64>() < policy.think_prob(bucket);

    let length_bin = if think {
        let probs = policy.bin_probs(bucket);
        Some(sample_categorical(rng, &probs))
    } else {
        None
    };

    let correct = rng.random::<f64>() < env.p_correct(think, problem.difficulty);

    let noise = if env.len_spread > 0.0 {
        let normal = Normal::new(0.0, env.len_spread).expect("len_spread validated non-negative");
        normal.sample(rng).exp()
    } else {
        1.0
    };
    let raw_len = if think {
        let mult = cfg.length_bin_multipliers[length_bin.unwrap()];
        env.base_len_think as f64 * mult * (1.0 + problem.difficulty) * noise
    } else {
        env.base_len_nothink as f64 * noise
    };
    let length = (raw_len.round() as u64).max(1);

    let outcome = Outcome {
        think,
        correct,
        length,
        group_id,
        sample_id,
    };
    let decision_logprobs = policy.decision_logprobs(&DecisionRecord {
        bucket,
        think,
        length_bin,
    });

    Trajectory {
        problem: *problem,
        outcome,
        decision_logprobs,
        length_bin,
    }
}

/// Reward value for each (think, correct) case; lets the collapse
/// diagnostic below work for any law expressible as four case values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseRewards {
    pub think_correct: f64,
    pub think_incorrect: f64,
    pub nothink_correct: f64,
    pub nothink_incorrect: f64,
}

impl CaseRewards {
    pub fn naive() -> Self {
        Self {
            think_correct: 1.0,
            think_incorrect: 0.0,
            nothink_correct: 2.0,
            nothink_incorrect: -1.0,
        }
    }

    /// Stage-1 case values at fixed penalty factors.
    pub fn balanced(delta_think: f64, delta_nothink: f64) -> Self {
        Self {
            think_correct: (1.0 - delta_think) * 1.0,
            think_incorrect: -delta_think,
            nothink_correct: (1.0 - delta_nothink) * 2.0,
            nothink_incorrect: (1.0 - delta_nothink) * -1.0 + delta_nothink * -2.0,
        }
    }
}

/// Expected reward of thinking minus expected reward of not thinking at
/// difficulty `d`, in closed form from the case values and the
/// environment's correctness probabilities. Positive values predict
/// collapse toward the thinking mode under that reward law.
pub fn expected_reward_gap(env: &EnvParams, rewards: &CaseRewards, d: f64) -> f64 {
    let pt = env.p_correct(true, d);
    let pn = env.p_correct(false, d);
    let e_think = pt * rewards.think_correct + (1.0 - pt) * rewards.think_incorrect;
    let e_nothink = pn * rewards.nothink_correct + (1.0 - pn) * rewards.nothink_incorrect;
    e_think - e_nothink
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stable log(1 + e^x).
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|l| (l - lse).exp()).collect()
}

/// Inverse-CDF draw from an explicit probability vector.
fn sample_categorical<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.len() - 1
}
