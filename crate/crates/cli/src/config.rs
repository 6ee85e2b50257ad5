//! Experiment configuration: the JSON document read by `train` and
//! `sweep`, its validation, and the config hash recorded in manifests and
//! checkpoints.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use autothink_core::env::{EnvParams, SurrogateConfig};
use autothink_core::grpo::{AdvantageMode, ClipConfig};
use autothink_core::reward::{Stage1Params, Stage3Params};
use autothink_core::train::{
    StageConfig, StageKind, StageRewardParams, SweepGrid, DEFAULT_BATCH_GROUPS, DEFAULT_GROUP_SIZE,
    DEFAULT_LEARNING_RATE,
};

use crate::CliError;

/// One schedule entry as written in the config file. Stage-specific
/// hyperparameters are flat optional fields; validation enforces that each
/// stage carries exactly the parameters its reward law needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageEntry {
    pub stage: StageKind,
    pub steps: usize,
    #[serde(default = "default_batch_groups")]
    pub batch_groups: usize,
    #[serde(default = "default_group_size")]
    pub group_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_clip_epsilon")]
    pub clip_epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

fn default_batch_groups() -> usize {
    DEFAULT_BATCH_GROUPS
}
fn default_group_size() -> usize {
    DEFAULT_GROUP_SIZE
}
fn default_learning_rate() -> f64 {
    DEFAULT_LEARNING_RATE
}
fn default_clip_epsilon() -> f64 {
    0.2
}

impl StageEntry {
    pub fn to_stage_config(&self, advantage_mode: AdvantageMode) -> Result<StageConfig, CliError> {
        let forbid = |name: &str, v: Option<f64>| -> Result<(), CliError> {
            match v {
                Some(_) => Err(CliError::Config(format!(
                    "{:?} does not take parameter `{name}`",
                    self.stage
                ))),
                None => Ok(()),
            }
        };
        let require = |name: &str, v: Option<f64>| -> Result<f64, CliError> {
            v.ok_or_else(|| {
                CliError::Config(format!("{:?} requires parameter `{name}`", self.stage))
            })
        };
        let reward_params = match self.stage {
            StageKind::Stage1 => {
                forbid("alpha", self.alpha)?;
                forbid("beta", self.beta)?;
                let params = Stage1Params::new(
                    require("gamma", self.gamma)?,
                    require("lambda", self.lambda)?,
                )
                .map_err(|e| CliError::Config(e.to_string()))?;
                StageRewardParams::Balanced(params)
            }
            StageKind::Stage2 => {
                forbid("gamma", self.gamma)?;
                forbid("lambda", self.lambda)?;
                forbid("alpha", self.alpha)?;
                forbid("beta", self.beta)?;
                StageRewardParams::None
            }
            StageKind::Stage3 => {
                forbid("gamma", self.gamma)?;
                forbid("lambda", self.lambda)?;
                let params =
                    Stage3Params::new(require("alpha", self.alpha)?, require("beta", self.beta)?)
                        .map_err(|e| CliError::Config(e.to_string()))?;
                StageRewardParams::LengthAware(params)
            }
        };
        let cfg = StageConfig {
            stage: self.stage,
            steps: self.steps,
            batch_groups: self.batch_groups,
            group_size: self.group_size,
            reward_params,
            learning_rate: self.learning_rate,
            clip: ClipConfig {
                epsilon: self.clip_epsilon,
            },
            advantage_mode,
        };
        cfg.validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

/// The experiment configuration document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default)]
    pub env: EnvParams,
    #[serde(default)]
    pub surrogate: SurrogateConfig,
    pub schedule: Vec<StageEntry>,
    #[serde(default)]
    pub advantage_mode: AdvantageMode,
    /// Context-length schedule of the reference setup; recorded for
    /// provenance, unused by the surrogate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_lengths: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Three-stage default schedule on the default environment.
    #[cfg(test)]
    pub fn default_config() -> Self {
        use autothink_core::train::DEFAULT_STAGE_STEPS;
        let stage = |kind: StageKind, steps: usize| StageEntry {
            stage: kind,
            steps,
            batch_groups: DEFAULT_BATCH_GROUPS,
            group_size: DEFAULT_GROUP_SIZE,
            learning_rate: DEFAULT_LEARNING_RATE,
            clip_epsilon: 0.2,
            gamma: (kind == StageKind::Stage1).then_some(0.5),
            lambda: (kind == StageKind::Stage1).then_some(2.0),
            alpha: (kind == StageKind::Stage3).then_some(0.05),
            beta: (kind == StageKind::Stage3).then_some(0.05),
        };
        Self {
            seed: 42,
            env: EnvParams::default(),
            surrogate: SurrogateConfig::default(),
            schedule: vec![
                stage(StageKind::Stage1, DEFAULT_STAGE_STEPS[0]),
                stage(StageKind::Stage2, DEFAULT_STAGE_STEPS[1]),
                stage(StageKind::Stage3, DEFAULT_STAGE_STEPS[2]),
            ],
            advantage_mode: AdvantageMode::default(),
            context_lengths: Some(vec![8192, 16384, 24576]),
            output_dir: None,
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.env
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.surrogate
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.schedule.is_empty() {
            return Err(CliError::Config("schedule must not be empty".into()));
        }
        for entry in &self.schedule {
            entry.to_stage_config(self.advantage_mode)?;
        }
        Ok(())
    }

    pub fn stage_configs(&self) -> Result<Vec<StageConfig>, CliError> {
        self.schedule
            .iter()
            .map(|e| e.to_stage_config(self.advantage_mode))
            .collect()
    }

    /// Hash of the run-determining configuration; equal hashes mean equal
    /// outputs. The output path does not influence run content and is
    /// excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The sweep grid document read by `sweep --grid`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFile {
    #[serde(flatten)]
    pub grid: SweepGrid,
    #[serde(default = "default_checkpoint_steps")]
    pub checkpoint_steps: Vec<u64>,
    #[serde(default = "default_window")]
    pub window: usize,
}

fn default_checkpoint_steps() -> Vec<u64> {
    vec![100, 200]
}
fn default_window() -> usize {
    100
}

impl GridFile {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let grid: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if grid.grid.is_empty() {
            return Err(CliError::Config("sweep grid is empty".into()));
        }
        if grid.window == 0 {
            return Err(CliError::Config("window must be positive".into()));
        }
        Ok(grid)
    }
}
