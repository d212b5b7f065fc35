//! Run manifest: the effective config, input hashes, per-stage row counts
//! and notes, chosen features, emitted-file hashes, and wall times. Wall
//! times live in their own section so reproducibility comparisons can strip
//! them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use nids_core::store::sha256_file;
use nids_core::{Error, Result};

use crate::config::PipelineConfig;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const STALE_MARKER: &str = "STALE";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StageRecord {
    pub rows_in: Option<usize>,
    pub rows_out: Option<usize>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: Option<PipelineConfig>,
    /// sha256 of the raw input file.
    pub input_hash: Option<String>,
    pub stages: BTreeMap<String, StageRecord>,
    pub chosen_features: Option<Vec<usize>>,
    /// Relative path -> sha256 of every emitted artifact.
    pub files: BTreeMap<String, String>,
    /// Wall time per stage in milliseconds; excluded from reproducibility
    /// comparisons.
    pub timings_ms: BTreeMap<String, u64>,
}

impl RunManifest {
    pub fn load_or_default(out_dir: &Path) -> RunManifest {
        let path = out_dir.join(MANIFEST_FILE);
        std::fs::read(&path)
            .ok()
            .and_then(|bytes| serde_json::from_slice(&bytes).ok())
            .unwrap_or_else(|| RunManifest {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                ..RunManifest::default()
            })
    }

    pub fn save(&self, out_dir: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(self)?;
        std::fs::write(out_dir.join(MANIFEST_FILE), json)?;
        Ok(())
    }

    pub fn stage_mut(&mut self, name: &str) -> &mut StageRecord {
        self.stages.entry(name.to_string()).or_default()
    }

    /// Hash an emitted file and list it under its path relative to out_dir.
    pub fn record_file(&mut self, out_dir: &Path, path: &Path) -> Result<()> {
        let rel = path
            .strip_prefix(out_dir)
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned();
        self.files.insert(rel, sha256_file(path)?);
        Ok(())
    }
}

/// Exclusive lock on an output directory; released on drop.
pub struct DirLock {
    path: std::path::PathBuf,
}

impl DirLock {
    pub fn acquire(out_dir: &Path) -> Result<DirLock> {
        std::fs::create_dir_all(out_dir)?;
        let path = out_dir.join(".nids.lock");
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(DirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Data(format!(
                "output directory '{}' is locked by another invocation (remove {} if stale)",
                out_dir.display(),
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
