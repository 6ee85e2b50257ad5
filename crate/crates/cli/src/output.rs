//! Output-directory plumbing: the lock file guarding concurrent runs and
//! the run manifest accompanying every output.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Exclusive lock on an output directory, released on drop.
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        let path = dir.join(".lock");
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::Config(format!(
                    "output directory {} is locked by another run (remove {} if stale)",
                    dir.display(),
                    path.display()
                )))
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Deterministic run manifest: no timestamps, so equal manifests mean
/// byte-equal outputs.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub config_hash: &'a str,
    pub seed: u64,
    pub version: &'a str,
}

pub fn write_manifest(
    dir: &Path,
    command: &str,
    config_hash: &str,
    seed: u64,
) -> Result<(), CliError> {
    let manifest = Manifest {
        command,
        config_hash,
        seed,
        version: env!("CARGO_PKG_VERSION"),
    };
    write_json(dir.join("manifest.json"), &manifest)
}

pub fn write_json<T: Serialize>(path: PathBuf, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Other(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(())
}
