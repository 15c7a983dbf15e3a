//! Output directory bookkeeping and run manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliResult;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub item: String,
    pub error: String,
}

/// Record of one CLI invocation, written as `manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    pub status: &'static str,
    pub scene_hash: Option<String>,
    pub grid: Vec<serde_json::Value>,
    pub config: serde_json::Value,
    pub timings: Vec<Timing>,
    pub outputs: Vec<OutputFile>,
    pub failures: Vec<Failure>,
}

/// Files written below one directory, with their hashes, plus timings.
pub struct Outputs {
    root: PathBuf,
    pub files: Vec<OutputFile>,
    pub timings: Vec<Timing>,
    pub grid: Vec<serde_json::Value>,
    pub failures: Vec<Failure>,
}

impl Outputs {
    pub fn new(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
            timings: Vec::new(),
            grid: Vec::new(),
            failures: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `content` to `rel` (relative to the root), creating parents.
    pub fn write(&mut self, rel: &str, content: &[u8]) -> CliResult<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, content)?;
        self.files.push(OutputFile {
            path: rel.to_string(),
            bytes: content.len() as u64,
            sha256: sha256_hex(content),
        });
        Ok(())
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.push(Timing {
            stage: stage.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        out
    }

    /// Moves the records of a nested directory into this one.
    pub fn absorb(&mut self, prefix: &str, other: Outputs) {
        for mut f in other.files {
            f.path = format!("{prefix}/{}", f.path);
            self.files.push(f);
        }
        for mut t in other.timings {
            t.stage = format!("{prefix}: {}", t.stage);
            self.timings.push(t);
        }
        self.grid.extend(other.grid);
        self.failures.extend(other.failures);
    }

    pub fn finish(
        mut self,
        scene_hash: Option<String>,
        config: serde_json::Value,
        status: &'static str,
    ) -> CliResult<RunManifest> {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: std::env::args().collect(),
            status,
            scene_hash,
            grid: std::mem::take(&mut self.grid),
            config,
            timings: std::mem::take(&mut self.timings),
            outputs: std::mem::take(&mut self.files),
            failures: std::mem::take(&mut self.failures),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.root.join("manifest.json"), text)?;
        Ok(manifest)
    }
}

/// CSV text from serializable rows, header included.
pub fn csv_rows<T: Serialize>(rows: &[T]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| crate::error::CliError {
        status: crate::error::Status::Io,
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_written_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Outputs::new(dir.path()).unwrap();
        out.write("a.csv", b"x,y\n1,2\n").unwrap();
        out.write("sub/b.csv", b"z\n").unwrap();
        let m = out.finish(Some("abc".into()), serde_json::json!({}), "ok").unwrap();
        assert_eq!(m.outputs.len(), 2);
        for f in &m.outputs {
            let bytes = fs::read(dir.path().join(&f.path)).unwrap();
            assert_eq!(sha256_hex(&bytes), f.sha256);
        }
        assert!(dir.path().join("manifest.json").exists());
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
