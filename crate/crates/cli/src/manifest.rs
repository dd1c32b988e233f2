//! Run manifest: what was produced, from which configuration, and how long
//! each stage took.
//!
//! The manifest is rewritten atomically (temporary file + rename) at the end
//! of every subcommand. Its `outputs` list is rebuilt from the output
//! directory, so every listed file exists and its digest is current.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Digest of everything the stage's output depends on.
    pub key: String,
    pub seconds: f64,
    /// Files the stage produced, relative to the output directory.
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunManifest {
    pub config_hash: String,
    /// Harness version and binary format identifiers.
    pub versions: BTreeMap<String, String>,
    pub stages: BTreeMap<String, StageRecord>,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn new(config_hash: &str) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("sparsecs".into(), env!("CARGO_PKG_VERSION").into());
        versions.insert("channel-format".into(), "SCSCHAN1".into());
        versions.insert("dictionary-format".into(), "SCSDICT1".into());
        versions.insert("model-format".into(), "SCSMODL1".into());
        Self { config_hash: config_hash.into(), versions, stages: BTreeMap::new(), outputs: Vec::new() }
    }

    /// Loads the manifest in `dir`, or starts a fresh one. A manifest from a
    /// different configuration is discarded together with its stage records.
    pub fn load_or_new(dir: &Path, config_hash: &str) -> CliResult<Self> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Self::new(config_hash));
        }
        let text = fs::read_to_string(&path)?;
        let m: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("unreadable manifest {}: {e}", path.display())))?;
        if m.config_hash != config_hash {
            log::info!("configuration changed since the last run; previous stage records are ignored");
            return Ok(Self::new(config_hash));
        }
        Ok(m)
    }

    /// True when `stage` completed with the same key and its outputs are
    /// still on disk unchanged.
    pub fn is_current(&self, dir: &Path, stage: &str, key: &str) -> CliResult<bool> {
        let Some(rec) = self.stages.get(stage) else { return Ok(false) };
        if rec.key != key {
            return Ok(false);
        }
        for rel in &rec.outputs {
            let p = dir.join(rel);
            if !p.exists() {
                return Ok(false);
            }
            let recorded = self.outputs.iter().find(|o| &o.path == rel);
            match recorded {
                Some(o) if o.sha256 == sha256_file(&p)? => {}
                _ => return Ok(false),
            }
        }
        Ok(true)
    }

    pub fn record(&mut self, stage: &str, key: String, seconds: f64, outputs: Vec<String>) {
        self.stages.insert(stage.into(), StageRecord { key, seconds, outputs });
    }

    /// Rescans `dir` and writes the manifest atomically.
    pub fn save(&mut self, dir: &Path) -> CliResult<()> {
        let mut files = Vec::new();
        collect_files(dir, dir, &mut files)?;
        files.sort();
        self.outputs = files
            .into_iter()
            .filter(|rel| rel != MANIFEST_FILE && !rel.ends_with(".tmp"))
            .map(|rel| {
                let p = dir.join(&rel);
                Ok(OutputFile { sha256: sha256_file(&p)?, bytes: fs::metadata(&p)?.len(), path: rel })
            })
            .collect::<CliResult<_>>()?;
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
        write_atomic(&dir.join(MANIFEST_FILE), text.as_bytes())
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> CliResult<()> {
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let p = entry.path();
        if entry.file_type()?.is_dir() {
            collect_files(root, &p, out)?;
        } else {
            let rel = p.strip_prefix(root).expect("inside root");
            out.push(rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"));
        }
    }
    Ok(())
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Writes `bytes` to `path` via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = tmp_path(path);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}
