//! Artifact directory: CSV tables, JSON summaries, and a manifest with digests
//! written last.

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Serialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    version: &'static str,
    config: &'a C,
    artifacts: &'a [ArtifactEntry],
    timings: &'a [StageTiming],
    passed: bool,
}

pub struct ArtifactWriter {
    dir: PathBuf,
    artifacts: Vec<ArtifactEntry>,
    timings: Vec<StageTiming>,
}

/// Fixed 17-significant-digit rendering so reruns diff cleanly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl ArtifactWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(ArtifactWriter {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
            timings: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: Vec<u8>) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, &bytes).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(ArtifactEntry {
            file: name.to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
        }
        let bytes = w.into_inner().context("flushing csv")?;
        self.write(name, bytes)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, bytes)
    }

    /// Runs `f` and records its wall-clock time under `stage`.
    pub fn stage<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f().with_context(|| format!("stage `{stage}`"))?;
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        Ok(out)
    }

    pub fn finish<C: Serialize>(self, config: &C, passed: bool) -> Result<()> {
        let manifest = Manifest {
            version: env!("CARGO_PKG_VERSION"),
            config,
            artifacts: &self.artifacts,
            timings: &self.timings,
            passed,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
    }
}
