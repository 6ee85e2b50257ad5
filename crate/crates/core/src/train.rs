//! Three-stage training orchestrator for the surrogate policy.
//!
//! Each step samples a batch of rollout groups, applies the active stage's
//! reward law, computes group-relative advantages, and takes one policy
//! gradient step. Runs are fully determined by (seed, schedule,
//! environment): every group gets its own RNG stream derived from the seed,
//! the stage index, the global step, and the group index, so results do not
//! depend on scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{
    rollout, sample_problem, EnvError, EnvParams, SurrogateConfig, SurrogatePolicy, Trajectory,
};
use crate::grpo::{
    group_advantage_with_mode, policy_gradient_step, AdvantageMode, ClipConfig, GrpoError,
    RolloutGroup,
};
use crate::reward::{
    naive_reward, penalty_factors, stage1_reward_with_factors, stage3_reward, BatchStats,
    RewardError, Stage1Params, Stage3Params,
};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid stage config: {0}")]
    InvalidConfig(String),
    #[error("diverged at stage {stage} step {step}: non-finite policy parameters")]
    Diverged { stage: usize, step: u64 },
    #[error("empty sweep grid")]
    EmptyGrid,
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Grpo(#[from] GrpoError),
    #[error(transparent)]
    Reward(#[from] RewardError),
}

/// Which of the three stages a schedule entry runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    Stage1,
    Stage2,
    Stage3,
}

/// Reward-law parameters for a stage. Stage 1 carries balancing parameters,
/// Stage 2 carries none, Stage 3 carries length-shaping parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StageRewardParams {
    Balanced(Stage1Params),
    None,
    LengthAware(Stage3Params),
}

/// Configuration for one stage of the schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageConfig {
    pub stage: StageKind,
    pub steps: usize,
    pub batch_groups: usize,
    pub group_size: usize,
    pub reward_params: StageRewardParams,
    pub learning_rate: f64,
    pub clip: ClipConfig,
    pub advantage_mode: AdvantageMode,
}

/// Defaults that converge within the default step budgets on the default
/// environment.
pub const DEFAULT_LEARNING_RATE: f64 = 2.0;
pub const DEFAULT_BATCH_GROUPS: usize = 8;
pub const DEFAULT_GROUP_SIZE: usize = 8;
pub const DEFAULT_STAGE_STEPS: [usize; 3] = [500, 500, 200];

impl StageConfig {
    pub fn stage1(steps: usize, params: Stage1Params) -> Self {
        Self {
            stage: StageKind::Stage1,
            steps,
            batch_groups: DEFAULT_BATCH_GROUPS,
            group_size: DEFAULT_GROUP_SIZE,
            reward_params: StageRewardParams::Balanced(params),
            learning_rate: DEFAULT_LEARNING_RATE,
            clip: ClipConfig::default(),
            advantage_mode: AdvantageMode::default(),
        }
    }

    pub fn stage2(steps: usize) -> Self {
        Self {
            stage: StageKind::Stage2,
            steps,
            batch_groups: DEFAULT_BATCH_GROUPS,
            group_size: DEFAULT_GROUP_SIZE,
            reward_params: StageRewardParams::None,
            learning_rate: DEFAULT_LEARNING_RATE,
            clip: ClipConfig::default(),
            advantage_mode: AdvantageMode::default(),
        }
    }

    pub fn stage3(steps: usize, params: Stage3Params) -> Self {
        Self {
            stage: StageKind::Stage3,
            steps,
            batch_groups: DEFAULT_BATCH_GROUPS,
            group_size: DEFAULT_GROUP_SIZE,
            reward_params: StageRewardParams::LengthAware(params),
            learning_rate: DEFAULT_LEARNING_RATE,
            clip: ClipConfig::default(),
            advantage_mode: AdvantageMode::default(),
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.steps == 0 {
            return Err(TrainError::InvalidConfig("steps must be >= 1".into()));
        }
        if self.batch_groups == 0 {
            return Err(TrainError::InvalidConfig(
                "batch_groups must be >= 1".into(),
            ));
        }
        if self.group_size < 2 {
            return Err(TrainError::InvalidConfig("group_size must be >= 2".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(TrainError::InvalidConfig(
                "learning_rate must be positive".into(),
            ));
        }
        if !(self.clip.epsilon > 0.0 && self.clip.epsilon < 1.0) {
            return Err(TrainError::InvalidConfig(
                "clip epsilon must lie in (0,1)".into(),
            ));
        }
        match (self.stage, &self.reward_params) {
            (StageKind::Stage1, StageRewardParams::Balanced(p)) => {
                Stage1Params::new(p.gamma, p.lambda)
                    .map(|_| ())
                    .map_err(TrainError::from)
            }
            (StageKind::Stage2, StageRewardParams::None) => Ok(()),
            (StageKind::Stage3, StageRewardParams::LengthAware(p)) => {
                Stage3Params::new(p.alpha, p.beta)
                    .map(|_| ())
                    .map_err(TrainError::from)
            }
            (stage, _) => Err(TrainError::InvalidConfig(format!(
                "{stage:?} does not match its reward parameters"
            ))),
        }
    }
}

/// One line of the metric log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRecord {
    pub step: u64,
    pub stage: StageKind,
    pub thinking_rate: f64,
    pub mean_reward: f64,
    pub accuracy: f64,
    pub mean_length: f64,
    pub mean_length_correct: f64,
    pub per_bucket_thinking_rate: Vec<f64>,
}

/// Policy snapshot taken at a stage boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCheckpoint {
    pub stage_index: usize,
    pub stage: StageKind,
    pub step: u64,
    pub policy: SurrogatePolicy,
}

/// Result of a full pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub policy: SurrogatePolicy,
    pub records: Vec<TrainLogRecord>,
    pub checkpoints: Vec<StageCheckpoint>,
}

/// Deterministic per-group RNG stream: the seed bytes encode the global
/// seed, the stage index, the global step, and the group index.
fn group_rng(seed: u64, stage_index: usize, step: u64, group: usize) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[0..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&(stage_index as u64).to_le_bytes());
    bytes[16..24].copy_from_slice(&step.to_le_bytes());
    bytes[24..32].copy_from_slice(&(group as u64).to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

fn stage_rewards(
    cfg: &StageConfig,
    batch: &[Vec<Trajectory>],
    stats: &BatchStats,
) -> Result<Vec<Vec<f64>>, TrainError> {
    let mut rewards = Vec::with_capacity(batch.len());
    match &cfg.reward_params {
        StageRewardParams::Balanced(params) => {
            let factors = penalty_factors(stats, params);
            for group in batch {
                rewards.push(
                    group
                        .iter()
                        .map(|t| stage1_reward_with_factors(t.outcome, &factors))
                        .collect(),
                );
            }
        }
        StageRewardParams::None => {
            for group in batch {
                rewards.push(group.iter().map(|t| naive_reward(t.outcome)).collect());
            }
        }
        StageRewardParams::LengthAware(params) => {
            for group in batch {
                let outcomes: Vec<_> = group.iter().map(|t| t.outcome).collect();
                let ys = crate::reward::standardize_lengths(&outcomes)?;
                rewards.push(
                    group
                        .iter()
                        .zip(ys)
                        .map(|(t, y)| stage3_reward(t.outcome, y, params))
                        .collect(),
                );
            }
        }
    }
    Ok(rewards)
}

/// Run one stage from `start_step`, returning the updated policy and one
/// log record per step.
pub fn run_stage(
    policy: &SurrogatePolicy,
    env: &EnvParams,
    surrogate: &SurrogateConfig,
    cfg: &StageConfig,
    seed: u64,
    stage_index: usize,
    start_step: u64,
) -> Result<(SurrogatePolicy, Vec<TrainLogRecord>), TrainError> {
    cfg.validate()?;
    env.validate()?;
    surrogate.validate()?;

    let mut policy = policy.clone();
    let mut records = Vec::with_capacity(cfg.steps);

    for local_step in 0..cfg.steps {
        let step = start_step + local_step as u64;

        // Rollout phase: one RNG stream per group.
        let mut batch: Vec<Vec<Trajectory>> = Vec::with_capacity(cfg.batch_groups);
        for g in 0..cfg.batch_groups {
            let mut rng = group_rng(seed, stage_index, step, g);
            let problem = sample_problem(&mut rng, &surrogate.difficulty, surrogate.buckets);
            let group_id = step * cfg.batch_groups as u64 + g as u64;
            let group: Vec<Trajectory> = (0..cfg.group_size)
                .map(|i| rollout(&policy, &problem, env, surrogate, &mut rng, group_id, i))
                .collect();
            batch.push(group);
        }

        // Reward, advantage, and update phase: a single serialized transaction.
        let all_outcomes: Vec<_> = batch.iter().flatten().map(|t| t.outcome).collect();
        let stats = BatchStats::from_outcomes(&all_outcomes)?;
        let rewards = stage_rewards(cfg, &batch, &stats)?;

        let groups: Vec<RolloutGroup> = batch
            .iter()
            .zip(&rewards)
            .map(|(group, rs)| RolloutGroup {
                query_id: group[0].outcome.group_id,
                rewards: rs.clone(),
                decision_logprobs_old: group.iter().map(|t| t.decision_logprobs.clone()).collect(),
                decisions: group.iter().map(|t| t.decision_record()).collect(),
            })
            .collect();
        let advantages = groups
            .iter()
            .map(|g| group_advantage_with_mode(&g.rewards, cfg.advantage_mode))
            .collect::<Result<Vec<_>, _>>()?;

        policy = policy_gradient_step(&policy, &groups, &advantages, &cfg.clip, cfg.learning_rate)
            .map_err(|e| match e {
                GrpoError::Diverged => TrainError::Diverged {
                    stage: stage_index,
                    step,
                },
                other => TrainError::Grpo(other),
            })?;
        if !policy.all_finite() {
            return Err(TrainError::Diverged {
                stage: stage_index,
                step,
            });
        }

        let n = all_outcomes.len() as f64;
        let correct: Vec<_> = all_outcomes.iter().filter(|o| o.correct).collect();
        let mean_length_correct = if correct.is_empty() {
            0.0
        } else {
            correct.iter().map(|o| o.length as f64).sum::<f64>() / correct.len() as f64
        };
        records.push(TrainLogRecord {
            step,
            stage: cfg.stage,
            thinking_rate: stats.z,
            mean_reward: rewards.iter().flatten().sum::<f64>() / n,
            accuracy: correct.len() as f64 / n,
            mean_length: all_outcomes.iter().map(|o| o.length as f64).sum::<f64>() / n,
            mean_length_correct,
            per_bucket_thinking_rate: (0..surrogate.buckets)
                .map(|b| policy.think_prob(b))
                .collect(),
        });
    }

    Ok((policy, records))
}

/// Run a schedule of stages in order, carrying the policy forward and
/// snapshotting it at each stage boundary.
pub fn run_pipeline(
    schedule: &[StageConfig],
    env: &EnvParams,
    surrogate: &SurrogateConfig,
    seed: u64,
) -> Result<PipelineRun, TrainError> {
    if schedule.is_empty() {
        return Err(TrainError::InvalidConfig(
            "schedule must not be empty".into(),
        ));
    }
    let mut policy = SurrogatePolicy::new(surrogate);
    let mut records = Vec::new();
    let mut checkpoints = Vec::new();
    let mut step = 0u64;

    for (stage_index, cfg) in schedule.iter().enumerate() {
        let (next, stage_records) =
            run_stage(&policy, env, surrogate, cfg, seed, stage_index, step)?;
        step += cfg.steps as u64;
        policy = next;
        records.extend(stage_records);
        checkpoints.push(StageCheckpoint {
            stage_index,
            stage: cfg.stage,
            step,
            policy: policy.clone(),
        });
    }

    Ok(PipelineRun {
        policy,
        records,
        checkpoints,
    })
}

/// Grid of stage hyperparameters to sweep; empty axes are left at the base
/// schedule's values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepGrid {
    pub gamma: Vec<f64>,
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub learning_rate: Vec<f64>,
}

impl SweepGrid {
    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
            && self.lambda.is_empty()
            && self.alpha.is_empty()
            && self.beta.is_empty()
            && self.learning_rate.is_empty()
    }
}

/// One grid point: the overridden values, keyed by parameter name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepAssignment {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
}

impl SweepAssignment {
    fn apply(&self, schedule: &[StageConfig]) -> Vec<StageConfig> {
        schedule
            .iter()
            .map(|cfg| {
                let mut cfg = cfg.clone();
                if let Some(lr) = self.learning_rate {
                    cfg.learning_rate = lr;
                }
                match &mut cfg.reward_params {
                    StageRewardParams::Balanced(p) => {
                        if let Some(g) = self.gamma {
                            p.gamma = g;
                        }
                        if let Some(l) = self.lambda {
                            p.lambda = l;
                        }
                    }
                    StageRewardParams::LengthAware(p) => {
                        if let Some(a) = self.alpha {
                            p.alpha = a;
                        }
                        if let Some(b) = self.beta {
                            p.beta = b;
                        }
                    }
                    StageRewardParams::None => {}
                }
                cfg
            })
            .collect()
    }
}

/// Thinking rate at a designated checkpoint step, averaged over the
/// trailing window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRate {
    pub step: u64,
    pub thinking_rate: f64,
}

/// Metrics recorded for one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPointReport {
    pub assignment: SweepAssignment,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub thinking_rate_at: Vec<CheckpointRate>,
    pub final_thinking_rate: f64,
    pub final_mean_length: f64,
    pub mean_length_trajectory: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub checkpoint_steps: Vec<u64>,
    pub window: usize,
    pub points: Vec<SweepPointReport>,
}

/// Mean of the `window` values ending at index `end` (inclusive); shrinks
/// at the start of the series.
pub fn trailing_mean(values: &[f64], window: usize, end: usize) -> f64 {
    let end = end.min(values.len().saturating_sub(1));
    let start = (end + 1).saturating_sub(window);
    let slice = &values[start..=end];
    slice.iter().sum::<f64>() / slice.len() as f64
}

fn cartesian(grid: &SweepGrid) -> Vec<SweepAssignment> {
    let opt = |v: &Vec<f64>| -> Vec<Option<f64>> {
        if v.is_empty() {
            vec![None]
        } else {
            v.iter().copied().map(Some).collect()
        }
    };
    let mut points = Vec::new();
    for &g in &opt(&grid.gamma) {
        for &l in &opt(&grid.lambda) {
            for &a in &opt(&grid.alpha) {
                for &b in &opt(&grid.beta) {
                    for &lr in &opt(&grid.learning_rate) {
                        points.push(SweepAssignment {
                            gamma: g,
                            lambda: l,
                            alpha: a,
                            beta: b,
                            learning_rate: lr,
                        });
                    }
                }
            }
        }
    }
    points
}

/// Run the pipeline once per grid point with a shared seed. Individual run
/// failures are recorded in the report and the sweep continues.
pub fn sweep(
    schedule: &[StageConfig],
    grid: &SweepGrid,
    env: &EnvParams,
    surrogate: &SurrogateConfig,
    seed: u64,
    checkpoint_steps: &[u64],
    window: usize,
) -> Result<SweepReport, TrainError> {
    if grid.is_empty() {
        return Err(TrainError::EmptyGrid);
    }
    let mut points = Vec::new();
    for assignment in cartesian(grid) {
        let schedule = assignment.apply(schedule);
        match run_pipeline(&schedule, env, surrogate, seed) {
            Ok(run) => {
                let rates: Vec<f64> = run.records.iter().map(|r| r.thinking_rate).collect();
                let lengths: Vec<f64> = run.records.iter().map(|r| r.mean_length).collect();
                let thinking_rate_at = checkpoint_steps
                    .iter()
                    .filter(|&&s| (s as usize) <= rates.len() && s > 0)
                    .map(|&s| CheckpointRate {
                        step: s,
                        thinking_rate: trailing_mean(&rates, window, s as usize - 1),
                    })
                    .collect();
                points.push(SweepPointReport {
                    assignment,
                    ok: true,
                    error: None,
                    thinking_rate_at,
                    final_thinking_rate: trailing_mean(&rates, window, rates.len() - 1),
                    final_mean_length: trailing_mean(&lengths, window, lengths.len() - 1),
                    mean_length_trajectory: lengths,
                });
            }
            Err(e) => points.push(SweepPointReport {
                assignment,
                ok: false,
                error: Some(e.to_string()),
                thinking_rate_at: Vec::new(),
                final_thinking_rate: f64::NAN,
                final_mean_length: f64::NAN,
                mean_length_trajectory: Vec::new(),
            }),
        }
    }
    Ok(SweepReport {
        checkpoint_steps: checkpoint_steps.to_vec(),
        window,
        points,
    })
}
