//! `autothink train`: run the staged schedule, writing metrics JSONL,
//! per-stage checkpoints, the resolved config, and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use autothink_core::env::SurrogatePolicy;
use autothink_core::train::{run_stage, StageKind, TrainError};

use crate::config::ExperimentConfig;
use crate::output::{write_json, write_manifest, DirLock};
use crate::CliError;

#[derive(Serialize)]
struct CheckpointFile<'a> {
    config_hash: &'a str,
    step: u64,
    stage_index: usize,
    stage: StageKind,
    #[serde(flatten)]
    policy: &'a SurrogatePolicy,
}

pub fn run(config_path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), CliError> {
    let mut config = ExperimentConfig::load(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let out_dir = out.or_else(|| config.output_dir.clone()).ok_or_else(|| {
        CliError::Config("no output directory: pass --out or set output_dir".into())
    })?;
    config.output_dir = Some(out_dir.clone());

    let _lock = DirLock::acquire(&out_dir)?;
    let hash = config.hash();
    write_manifest(&out_dir, "train", &hash, config.seed)?;
    write_json(out_dir.join("config.json"), &config)?;

    let schedule = config.stage_configs()?;
    let mut policy = SurrogatePolicy::new(&config.surrogate);
    let mut metrics = fs::File::create(out_dir.join("metrics.jsonl"))?;
    let mut step = 0u64;

    for (stage_index, stage_cfg) in schedule.iter().enumerate() {
        log::info!(
            "stage {} ({:?}): {} steps",
            stage_index + 1,
            stage_cfg.stage,
            stage_cfg.steps
        );
        let (next, records) = run_stage(
            &policy,
            &config.env,
            &config.surrogate,
            stage_cfg,
            config.seed,
            stage_index,
            step,
        )
        .map_err(|e| match e {
            TrainError::Diverged { stage, step } => CliError::Diverged(format!(
                "stage {stage} step {step}; last completed stage checkpoint retained"
            )),
            other => CliError::Config(other.to_string()),
        })?;
        policy = next;
        step += stage_cfg.steps as u64;
        for record in &records {
            let line = serde_json::to_string(record)
                .map_err(|e| CliError::Other(format!("serialize metrics: {e}")))?;
            metrics.write_all(line.as_bytes())?;
            metrics.write_all(b"\n")?;
        }
        let checkpoint = CheckpointFile {
            config_hash: &hash,
            step,
            stage_index,
            stage: stage_cfg.stage,
            policy: &policy,
        };
        let name = format!(
            "checkpoint_{:02}_{}.json",
            stage_index + 1,
            stage_name(stage_cfg.stage)
        );
        write_json(out_dir.join(name), &checkpoint)?;
    }
    metrics.flush()?;
    log::info!("done: {} steps, outputs in {}", step, out_dir.display());
    Ok(())
}

fn stage_name(kind: StageKind) -> &'static str {
    match kind {
        StageKind::Stage1 => "stage1",
        StageKind::Stage2 => "stage2",
        StageKind::Stage3 => "stage3",
    }
}
