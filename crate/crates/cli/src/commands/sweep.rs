//! `autothink sweep`: run the pipeline once per grid point and write the
//! sweep report.

use std::path::{Path, PathBuf};

use autothink_core::train::{sweep, TrainError};

use crate::config::{ExperimentConfig, GridFile};
use crate::output::{write_json, write_manifest, DirLock};
use crate::CliError;

pub fn run(
    config_path: &Path,
    grid_path: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let mut config = ExperimentConfig::load(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let grid_file = GridFile::load(grid_path)?;
    let out_dir = out.or_else(|| config.output_dir.clone()).ok_or_else(|| {
        CliError::Config("no output directory: pass --out or set output_dir".into())
    })?;
    config.output_dir = Some(out_dir.clone());

    let _lock = DirLock::acquire(&out_dir)?;
    write_manifest(&out_dir, "sweep", &config.hash(), config.seed)?;
    write_json(out_dir.join("config.json"), &config)?;
    write_json(out_dir.join("grid.json"), &grid_file)?;

    let schedule = config.stage_configs()?;
    let report = sweep(
        &schedule,
        &grid_file.grid,
        &config.env,
        &config.surrogate,
        config.seed,
        &grid_file.checkpoint_steps,
        grid_file.window,
    )
    .map_err(|e| match e {
        TrainError::EmptyGrid => CliError::Config("sweep grid is empty".into()),
        other => CliError::Config(other.to_string()),
    })?;
    write_json(out_dir.join("sweep_report.json"), &report)?;

    let failures = report.points.iter().filter(|p| !p.ok).count();
    log::info!(
        "sweep finished: {} points, {failures} failed",
        report.points.len()
    );
    Ok(())
}
