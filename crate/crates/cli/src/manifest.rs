//! Run manifests and atomic output directories.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::Utc;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputFile {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Failure {
    pub exit_code: i32,
    pub message: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub mesh_checksum: Option<String>,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputFile>,
    pub failure: Option<Failure>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            config,
            mesh_checksum: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started: Utc::now().to_rfc3339(),
            finished: String::new(),
            outputs: Vec::new(),
            failure: None,
        }
    }

    #[cfg(test)]
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    fn write(&mut self, dir: &Path) -> Result<(), CliError> {
        self.finished = Utc::now().to_rfc3339();
        fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn inventory(root: &Path) -> Result<Vec<OutputFile>, CliError> {
    let mut files = Vec::new();
    let mut stack: Vec<PathBuf> = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap_or(&path).to_string_lossy().replace('\\', "/");
                if rel != MANIFEST {
                    files.push(OutputFile {
                        sha256: sha256_file(&path)?,
                        bytes: fs::metadata(&path)?.len(),
                        path: rel,
                    });
                }
            }
        }
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(files)
}

/// Runs `body` against a scratch directory next to `out` and renames it into
/// place on success. On failure `out` holds only the manifest with the
/// failure record. `body` returns the mesh checksum.
pub fn run_atomic(
    out: &Path,
    mut manifest: RunManifest,
    body: impl FnOnce(&Path) -> Result<Option<String>, CliError>,
) -> Result<RunManifest, CliError> {
    if out.exists() && (!out.is_dir() || fs::read_dir(out)?.next().is_some()) {
        return Err(CliError::config(format!(
            "output directory {} exists and is not empty",
            out.display()
        )));
    }
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent)?;
    let scratch = tempfile::Builder::new().prefix(".lambda1-").tempdir_in(&parent)?;

    match body(scratch.path()) {
        Ok(checksum) => {
            manifest.mesh_checksum = checksum;
            manifest.outputs = inventory(scratch.path())?;
            manifest.write(scratch.path())?;
            if out.exists() {
                fs::remove_dir(out)?;
            }
            fs::rename(scratch.keep(), out)?;
            Ok(manifest)
        }
        Err(e) => {
            drop(scratch);
            fs::create_dir_all(out)?;
            manifest.failure = Some(Failure {
                exit_code: e.code,
                message: e.message.clone(),
            });
            manifest.write(out)?;
            Err(e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn success_moves_outputs_into_place() {
        let root = tempfile::tempdir().unwrap();
        let out = root.path().join("run");
        let m = run_atomic(&out, RunManifest::new("mesh", serde_json::json!({})), |dir| {
            fs::create_dir(dir.join("sub"))?;
            fs::write(dir.join("sub/b.csv"), "2\n")?;
            fs::write(dir.join("a.csv"), "1\n")?;
            Ok(Some("abc".into()))
        })
        .unwrap();
        let names: Vec<&str> = m.outputs.iter().map(|o| o.path.as_str()).collect();
        assert_eq!(names, ["a.csv", "sub/b.csv"]);
        assert_eq!(m.outputs[0].sha256, sha256_file(&out.join("a.csv")).unwrap());
        let back = RunManifest::read(&out.join(MANIFEST)).unwrap();
        assert_eq!(back.mesh_checksum.as_deref(), Some("abc"));
        // Only the output directory remains next to the scratch location.
        assert_eq!(fs::read_dir(root.path()).unwrap().count(), 1);
    }

    #[test]
    fn failure_leaves_only_the_manifest() {
        let root = tempfile::tempdir().unwrap();
        let out = root.path().join("run");
        let err = run_atomic(&out, RunManifest::new("eigen", serde_json::json!({})), |dir| {
            fs::write(dir.join("partial.csv"), "x")?;
            Err(CliError::solver("no convergence"))
        })
        .unwrap_err();
        assert_eq!(err.code, 3);
        let entries: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(entries, [MANIFEST]);
        let m = RunManifest::read(&out.join(MANIFEST)).unwrap();
        assert_eq!(m.failure.unwrap().exit_code, 3);
        assert_eq!(fs::read_dir(root.path()).unwrap().count(), 1);
    }

    #[test]
    fn refuses_non_empty_output() {
        let root = tempfile::tempdir().unwrap();
        fs::write(root.path().join("keep.txt"), "x").unwrap();
        let err = run_atomic(root.path(), RunManifest::new("mesh", serde_json::json!({})), |_| Ok(None)).unwrap_err();
        assert_eq!(err.code, 2);
        assert!(root.path().join("keep.txt").exists());
    }
}
