//! Run manifests: every artifact a run writes, with a SHA-256 per file.
//!
//! The manifest is written last, after all artifacts, so a complete manifest
//! implies a complete run. Entries are sorted by path and paths are relative
//! to the run directory, which makes manifests of identical runs byte-equal
//! wherever they live on disk.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::PipelineError;

const FORMAT_TAG: &str = "twostage-manifest v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Path relative to the run directory, `/`-separated.
    pub path: String,
    /// Lowercase hex SHA-256 of the file contents.
    pub sha256: String,
}

/// One mismatch found while re-verifying a manifest against the directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ManifestIssue {
    Missing { path: String },
    HashMismatch { path: String, expected: String, actual: String },
}

impl std::fmt::Display for ManifestIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ManifestIssue::Missing { path } => write!(f, "{path}: missing"),
            ManifestIssue::HashMismatch { path, expected, actual } => {
                write!(f, "{path}: hash {actual} != recorded {expected}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

impl Manifest {
    /// Hash the given files (paths relative to `root`) into a manifest,
    /// sorted by path.
    pub fn from_files(root: &Path, relative_paths: &[&str]) -> Result<Self, PipelineError> {
        let mut entries = Vec::with_capacity(relative_paths.len());
        for rel in relative_paths {
            let bytes = fs::read(root.join(rel))
                .map_err(|e| PipelineError::runtime(&format!("manifest: read {rel}"), e))?;
            entries.push(ManifestEntry {
                path: rel.to_string(),
                sha256: sha256_hex(&bytes),
            });
        }
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(Manifest { entries })
    }

    pub fn write(&self, path: &Path) -> Result<(), PipelineError> {
        let mut out = String::from(FORMAT_TAG);
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!("{}  {}\n", e.sha256, e.path));
        }
        fs::write(path, out)
            .map_err(|e| PipelineError::runtime("manifest: write", e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::runtime(&format!("manifest: read {}", path.display()), e))?;
        let mut lines = text.lines();
        match lines.next() {
            Some(FORMAT_TAG) => {}
            other => {
                return Err(PipelineError::Runtime(format!(
                    "manifest: unsupported header `{}`",
                    other.unwrap_or_default()
                )))
            }
        }
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let (hash, p) = line.split_once("  ").ok_or_else(|| {
                PipelineError::Runtime(format!("manifest: line {}: expected `<hash>  <path>`", i + 2))
            })?;
            if hash.len() != 64 || !hash.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(PipelineError::Runtime(format!(
                    "manifest: line {}: `{hash}` is not a sha256 hex digest",
                    i + 2
                )));
            }
            entries.push(ManifestEntry {
                path: p.to_string(),
                sha256: hash.to_string(),
            });
        }
        Ok(Manifest { entries })
    }

    /// Re-hash every listed file under `root` and report divergences.
    pub fn verify(&self, root: &Path) -> Result<Vec<ManifestIssue>, PipelineError> {
        let mut issues = Vec::new();
        for e in &self.entries {
            match fs::read(root.join(&e.path)) {
                Err(_) => issues.push(ManifestIssue::Missing { path: e.path.clone() }),
                Ok(bytes) => {
                    let actual = sha256_hex(&bytes);
                    if actual != e.sha256 {
                        issues.push(ManifestIssue::HashMismatch {
                            path: e.path.clone(),
                            expected: e.sha256.clone(),
                            actual,
                        });
                    }
                }
            }
        }
        Ok(issues)
    }
}
