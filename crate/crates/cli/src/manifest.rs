use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use coxnet::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Record of one command run: enough to re-run it and check the outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments as typed.
    pub argv: Vec<String>,
    /// Arguments after config-file expansion; replay runs these.
    pub resolved_args: Vec<String>,
    /// Every option value the command ran with, defaults included.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub working_directory: PathBuf,
    pub inputs: Vec<FileDigest>,
    /// Files under the output directory, relative to it (manifest excluded).
    pub outputs: Vec<FileDigest>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub timing: serde_json::Value,
}

pub fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Digests of the given files, or of every file below a directory.
pub fn digest_inputs(paths: &[PathBuf]) -> Result<Vec<FileDigest>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            for f in list_files(p)? {
                out.push(FileDigest {
                    path: p.join(&f).display().to_string(),
                    sha256: sha256_file(&p.join(&f))?,
                });
            }
        } else {
            out.push(FileDigest {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            });
        }
    }
    Ok(out)
}

/// Relative paths of all files below `root`, sorted, manifest excluded.
pub fn list_files(root: &Path) -> Result<Vec<String>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
        for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                let rel = path.strip_prefix(root).expect("below root");
                let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
                if rel != MANIFEST_FILE {
                    out.push(rel);
                }
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(root, root, &mut out)?;
    out.sort();
    Ok(out)
}

pub fn digest_outputs(out_dir: &Path) -> Result<Vec<FileDigest>> {
    list_files(out_dir)?
        .into_iter()
        .map(|rel| {
            Ok(FileDigest {
                sha256: sha256_file(&out_dir.join(&rel))?,
                path: rel,
            })
        })
        .collect()
}

impl RunManifest {
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::invalid(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
    }

    /// Fails when a recorded input is missing or has changed.
    pub fn check_inputs(&self) -> Result<()> {
        for input in &self.inputs {
            let path = self.working_directory.join(&input.path);
            let digest = sha256_file(&path)?;
            if digest != input.sha256 {
                return Err(Error::invalid(format!(
                    "input {} changed since the recorded run",
                    path.display()
                )));
            }
        }
        Ok(())
    }
}

/// Paths whose digests differ between two output listings.
pub fn differing_outputs(expected: &[FileDigest], actual: &[FileDigest]) -> Vec<String> {
    let mut diff = Vec::new();
    for e in expected {
        match actual.iter().find(|a| a.path == e.path) {
            Some(a) if a.sha256 == e.sha256 => {}
            _ => diff.push(e.path.clone()),
        }
    }
    for a in actual {
        if !expected.iter().any(|e| e.path == a.path) {
            diff.push(a.path.clone());
        }
    }
    diff
}
