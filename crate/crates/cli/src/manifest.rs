//! The record written beside every command's outputs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;

use crate::{Failure, Outcome};

/// Everything needed to rerun a command and get the same files back.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// The full command line as invoked.
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_secs: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunManifest {
    pub fn new(command: &str, started: Instant) -> Self {
        RunManifest {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            argv: std::env::args().collect(),
            config: serde_json::Value::Null,
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_clock_secs: 0.0,
            started: Some(started),
        }
    }

    pub fn config(mut self, config: serde_json::Value) -> Self {
        self.config = config;
        self
    }

    pub fn seeds(mut self, seeds: Vec<u64>) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn inputs(mut self, inputs: Vec<PathBuf>) -> Self {
        self.inputs = inputs;
        self
    }

    pub fn outputs(mut self, outputs: Vec<PathBuf>) -> Self {
        self.outputs = outputs;
        self
    }

    /// Writes `<command>.manifest.json` into `dir`.
    pub fn write(self, dir: &Path) -> Outcome {
        let path = dir.join(format!("{}.manifest.json", self.command));
        self.write_as(&path)
    }

    pub fn write_as(mut self, path: &Path) -> Outcome {
        if let Some(t) = self.started {
            self.wall_clock_secs = t.elapsed().as_secs_f64();
        }
        let mut text = serde_json::to_string_pretty(&self).map_err(|e| Failure::Compute(e.into()))?;
        text.push('\n');
        std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::Usage)
    }
}
