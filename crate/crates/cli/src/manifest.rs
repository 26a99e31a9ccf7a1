use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{SecondsFormat, Utc};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{io_at, CliResult};

pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Bookkeeping for one run directory. The resolved config is frozen on creation; the
/// manifest is written by [`RunDir::finish`].
pub struct RunDir {
    root: PathBuf,
    command: String,
    config_hash: String,
    started: String,
    clock: Instant,
    seeds: BTreeMap<String, u64>,
    artifacts: Vec<String>,
    notes: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    run_id: String,
    command: &'a str,
    code_version: &'a str,
    config_hash: &'a str,
    seeds: &'a BTreeMap<String, u64>,
    started: &'a str,
    finished: String,
    wall_clock_seconds: f64,
    artifacts: &'a [String],
    notes: &'a [String],
}

impl RunDir {
    pub fn create(root: &Path, command: &str, config: &RunConfig) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(io_at(root))?;
        let mut dir = Self {
            root: root.to_path_buf(),
            command: command.into(),
            config_hash: config.hash(),
            started: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            clock: Instant::now(),
            seeds: BTreeMap::new(),
            artifacts: Vec::new(),
            notes: Vec::new(),
        };
        dir.seeds.insert("master".into(), config.seed);
        dir.write("config.toml", &config.to_toml())?;
        Ok(dir)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn seed(&mut self, name: impl Into<String>, value: u64) {
        self.seeds.insert(name.into(), value);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Writes `contents` to `relative` under the run directory and records it.
    pub fn write(&mut self, relative: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io_at(parent))?;
        }
        std::fs::write(&path, contents).map_err(io_at(&path))?;
        if !self.artifacts.iter().any(|a| a == relative) {
            self.artifacts.push(relative.to_string());
        }
        Ok(path)
    }

    pub fn finish(mut self) -> CliResult<PathBuf> {
        self.artifacts.sort();
        let finished = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
        let manifest = Manifest {
            run_id: format!("{}-{}-{}", self.command, &self.config_hash[..12], self.started),
            command: &self.command,
            code_version: CODE_VERSION,
            config_hash: &self.config_hash,
            seeds: &self.seeds,
            started: &self.started,
            finished,
            wall_clock_seconds: self.clock.elapsed().as_secs_f64(),
            artifacts: &self.artifacts,
            notes: &self.notes,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
        let path = self.root.join("manifest.json");
        std::fs::write(&path, text + "\n").map_err(io_at(&path))?;
        Ok(path)
    }
}
