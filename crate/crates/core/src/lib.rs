//! Desk-scale laboratory for adaptive-reasoning reinforcement learning.
//!
//! The crate is organized around five modules:
//!
//! - [`reward`]: the three stage reward laws (batch-balanced, naive
//!   passthrough, length-aware) applied to sampled outcomes.
//! - [`grpo`]: group-relative advantage estimation and the clipped
//!   token-level policy objective, with an analytic gradient for the
//!   surrogate policy.
//! - [`env`]: a synthetic reasoning environment and parametric surrogate
//!   policy calibrated so explicit thinking helps more on harder problems.
//! - [`train`]: the three-stage training orchestrator, metric logging,
//!   checkpointing, and hyperparameter sweeps.
//! - [`analytics`]: prompt construction, transcript parsing, reasoning-mode
//!   classification, difficulty bucketing, keyword profiling, and the
//!   Efficiency-F1 metric.
//!
//! Everything is deterministic: a run is fully determined by its seed and
//! configuration.

// `!(x > 0.0)`-style validation is deliberate: unlike `x <= 0.0` it also
// rejects NaN. The negated multiplications mirror the reward laws as
// written, with explicit anchor values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::neg_multiply)]

pub mod analytics;
pub mod env;
pub mod grpo;
pub mod reward;
pub mod train;

pub use analytics::{BenchmarkSummary, Mode, PromptVariant, Transcript};
pub use env::{
    DifficultyRange, EnvParams, ProblemSpec, SurrogateConfig, SurrogatePolicy, Trajectory,
};
pub use grpo::{AdvantageMode, AdvantageSet, ClipConfig, RolloutGroup};
pub use reward::{BatchStats, Outcome, Stage1Params, Stage3Params, StandardizedLength};
pub use train::{StageConfig, StageKind, TrainLogRecord};
