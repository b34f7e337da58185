use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use recourse_lab::shiftlab::ExperimentConfig;
use recourse_lab::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

/// Files written into one output directory, each atomically.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Writes to a temporary file in the same directory, then renames it
    /// into place.
    pub fn write(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut NamedTempFile) -> Result<()>,
    ) -> Result<()> {
        let target = self.dir.join(name);
        let io = |e: std::io::Error| Error::Io {
            path: target.clone(),
            source: e,
        };
        let mut tmp = NamedTempFile::new_in(&self.dir).map_err(io)?;
        fill(&mut tmp)?;
        tmp.flush().map_err(io)?;
        tmp.persist(&target).map_err(|e| io(e.error))?;
        self.written.push(target);
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        self.write(name, |w| {
            w.write_all(text.as_bytes())
                .map_err(|e| Error::Io { path, source: e })
        })
    }

    pub fn paths(&self) -> Vec<PathBuf> {
        self.written.clone()
    }
}

#[derive(Serialize)]
pub struct Manifest {
    config_hash: String,
    tool_version: &'static str,
    outputs: Vec<PathBuf>,
    wall_time: f64,
}

impl Manifest {
    pub fn new(cfg: &ExperimentConfig, outputs: Vec<PathBuf>, start: Instant) -> Self {
        let resolved = serde_json::to_vec(cfg).expect("config serializes");
        Manifest {
            config_hash: hex::encode(Sha256::digest(&resolved)),
            tool_version: env!("CARGO_PKG_VERSION"),
            outputs,
            wall_time: start.elapsed().as_secs_f64(),
        }
    }

    pub fn write(&self, files: &mut Outputs) -> Result<()> {
        files.write_text("manifest.json", &serde_json::to_string_pretty(self)?)
    }
}
