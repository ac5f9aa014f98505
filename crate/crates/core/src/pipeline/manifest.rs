//! Stage manifests and the run-directory lock.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::io::{sha256_file, to_json_pretty, write_atomic};
use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digest {
    pub path: String,
    pub sha256: String,
}

/// Provenance of one stage's outputs, stored next to its primary artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub inputs: Vec<Digest>,
    pub outputs: Vec<Digest>,
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let name = primary.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    primary.with_file_name(format!("{name}.manifest.json"))
}

impl Manifest {
    pub fn load(primary: &Path) -> Option<Manifest> {
        let bytes = fs::read(manifest_path(primary)).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    pub fn store(&self, primary: &Path) -> Result<()> {
        write_atomic(&manifest_path(primary), &to_json_pretty(self)?)
    }

    /// Same provenance, and every recorded output still on disk unchanged.
    pub fn is_current(&self, other: &Manifest, run_dir: &Path) -> bool {
        self.stage == other.stage
            && self.tool_version == other.tool_version
            && self.config_hash == other.config_hash
            && self.seed == other.seed
            && self.inputs == other.inputs
            && !self.outputs.is_empty()
            && self
                .outputs
                .iter()
                .all(|d| sha256_file(&run_dir.join(&d.path)).is_ok_and(|h| h == d.sha256))
    }
}

/// Exclusive hold on a run directory, released on drop.
#[derive(Debug)]
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(run_dir: &Path) -> Result<RunLock> {
        fs::create_dir_all(run_dir).map_err(|e| Error::io(run_dir, e))?;
        let path = run_dir.join(".lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(RunLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(path)),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let first = RunLock::acquire(dir.path()).unwrap();
        assert!(matches!(RunLock::acquire(dir.path()), Err(Error::Locked(_))));
        drop(first);
        RunLock::acquire(dir.path()).unwrap();
    }

    #[test]
    fn manifest_currency() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("a.jsonl");
        fs::write(&out, "x\n").unwrap();
        let m = Manifest {
            stage: "s".into(),
            tool_version: TOOL_VERSION.into(),
            config_hash: "c".into(),
            seed: 1,
            inputs: vec![],
            outputs: vec![Digest {
                path: "a.jsonl".into(),
                sha256: sha256_file(&out).unwrap(),
            }],
        };
        m.store(&out).unwrap();
        assert!(dir.path().join("a.jsonl.manifest.json").exists());
        let loaded = Manifest::load(&out).unwrap();
        assert!(loaded.is_current(&m, dir.path()));
        let mut other = m.clone();
        other.seed = 2;
        assert!(!loaded.is_current(&other, dir.path()));
        fs::write(&out, "y\n").unwrap();
        assert!(!loaded.is_current(&m, dir.path()));
    }
}
