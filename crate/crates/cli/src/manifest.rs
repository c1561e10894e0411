//! Run manifest written next to every artifact.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliResult;

#[derive(Debug, Default, Serialize)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embed_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oversample: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prune_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_frac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    pub threads: usize,
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub flag: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub classify: f64,
    pub regress: f64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub params: Params,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub stages: Vec<StageTime>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub epoch_losses: Vec<EpochLoss>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, params: Params) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            params,
            inputs: Vec::new(),
            outputs: Vec::new(),
            stages: Vec::new(),
            epoch_losses: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn input(&mut self, flag: &str, path: &Path) -> CliResult<()> {
        let digest = Sha256::digest(fs::read(path)?);
        self.inputs.push(InputDigest {
            flag: flag.to_string(),
            path: path.display().to_string(),
            sha256: hex::encode(digest),
        });
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Runs `f` and records its wall time under `stage`.
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> CliResult<T>) -> CliResult<T> {
        let started = Instant::now();
        let out = f()?;
        self.stages.push(StageTime {
            stage: stage.to_string(),
            seconds: started.elapsed().as_secs_f64(),
        });
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut file = fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut file, self).map_err(std::io::Error::from)?;
        file.write_all(b"\n")?;
        Ok(())
    }
}

/// Per-stage generator seed derived from the run seed and a fixed label.
pub fn stage_seed(rng_seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(label.as_bytes());
    h.update(rng_seed.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}
