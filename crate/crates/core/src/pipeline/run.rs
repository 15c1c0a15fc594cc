use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
/// The one file whose content varies between identical runs.
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Artifact {
    /// Path relative to the run directory, `/`-separated.
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    /// Some joint diagonalisation hit its sweep limit; outputs are written
    /// but flagged.
    NotConverged,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_hash: &'a str,
    status: RunStatus,
    warnings: &'a [String],
    artifacts: &'a [Artifact],
}

#[derive(Debug, Serialize)]
struct Meta<'a> {
    created_unix_seconds: u64,
    config_hash: &'a str,
}

/// Output directory of one command. Every file goes through [`RunDir::write`]
/// so the manifest can list it with its digest.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    artifacts: Vec<Artifact>,
    warnings: Vec<String>,
    status: RunStatus,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(RunDir {
            root: root.to_path_buf(),
            artifacts: Vec::new(),
            warnings: Vec::new(),
            status: RunStatus::Ok,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn status(&self) -> RunStatus {
        self.status
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("{msg}");
        self.warnings.push(msg);
    }

    pub fn flag_not_converged(&mut self, what: &str) {
        self.warn(format!("{what} did not converge"));
        self.status = RunStatus::NotConverged;
    }

    /// Writes `bytes` to `rel` (a `/`-separated relative path).
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        if rel.is_empty() || rel.starts_with('/') || rel.split('/').any(|c| c == ".." || c.is_empty()) {
            return Err(Error::invalid(format!("bad artefact path {rel:?}")));
        }
        if rel == MANIFEST_FILE || rel == META_FILE {
            return Err(Error::invalid(format!("{rel} is reserved")));
        }
        if self.artifacts.iter().any(|a| a.path == rel) {
            return Err(Error::invalid(format!("artefact {rel} written twice")));
        }
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.artifacts.push(Artifact {
            path: rel.to_string(),
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_vec_pretty(value)?;
        text.push(b'\n');
        self.write(rel, &text)
    }

    /// Renders into memory with `f`, then writes.
    pub fn write_with(&mut self, rel: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(rel, &buf)
    }

    /// Writes the manifest and the timestamped metadata file.
    pub fn finish(mut self, command: &str, config_hash: &str) -> Result<RunStatus> {
        self.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash,
            status: self.status,
            warnings: &self.warnings,
            artifacts: &self.artifacts,
        };
        let path = self.root.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        let created = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let meta = Meta {
            created_unix_seconds: created,
            config_hash,
        };
        let path = self.root.join(META_FILE);
        let text = serde_json::to_string_pretty(&meta)? + "\n";
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(self.status)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_sorted_digests() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = RunDir::create(dir.path()).unwrap();
        run.write("b/x.txt", b"hello").unwrap();
        run.write_json("a.json", &[1, 2]).unwrap();
        assert!(run.write("b/x.txt", b"again").is_err());
        assert!(run.write("../escape", b"").is_err());
        assert!(run.write(META_FILE, b"").is_err());
        assert_eq!(run.finish("test", "abc").unwrap(), RunStatus::Ok);
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
        let arts = manifest["artifacts"].as_array().unwrap();
        assert_eq!(arts[0]["path"], "a.json");
        assert_eq!(arts[1]["path"], "b/x.txt");
        // sha256("hello")
        assert_eq!(
            arts[1]["sha256"],
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        );
        assert_eq!(std::fs::read(dir.path().join("b/x.txt")).unwrap(), b"hello");
        assert!(dir.path().join(META_FILE).exists());
    }

    #[test]
    fn non_convergence_is_flagged() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = RunDir::create(dir.path()).unwrap();
        run.flag_not_converged("overall basis");
        assert_eq!(run.finish("test", "abc").unwrap(), RunStatus::NotConverged);
        let text = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(text.contains("\"not_converged\""));
        assert!(text.contains("overall basis did not converge"));
    }
}
