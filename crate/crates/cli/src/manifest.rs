//! Run manifest written next to every command's outputs.

use std::fs::File;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct StageRecord {
    pub name: String,
    pub counts: serde_json::Value,
    pub wall_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub stages: Vec<StageRecord>,
}

pub fn elapsed_ms(started: Instant) -> f64 {
    started.elapsed().as_secs_f64() * 1e3
}

impl RunManifest {
    pub fn new(command: &'static str, config: &impl Serialize) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            inputs: Vec::new(),
            stages: Vec::new(),
        }
    }

    pub fn digest_input(&mut self, path: &Path) -> io::Result<()> {
        let mut file = File::open(path)?;
        let mut hasher = Sha256::new();
        let mut buf = vec![0u8; 1 << 16];
        let mut bytes = 0u64;
        loop {
            let n = file.read(&mut buf)?;
            if n == 0 {
                break;
            }
            hasher.update(&buf[..n]);
            bytes += n as u64;
        }
        self.inputs.push(InputDigest {
            path: path.to_path_buf(),
            bytes,
            sha256: hex::encode(hasher.finalize()),
        });
        Ok(())
    }

    pub fn stage(&mut self, name: impl Into<String>, started: Instant, counts: serde_json::Value) {
        self.stages.push(StageRecord {
            name: name.into(),
            counts,
            wall_ms: elapsed_ms(started),
        });
    }

    pub fn push_stage(&mut self, stage: StageRecord) {
        self.stages.push(stage);
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        std::fs::write(path, text + "\n")
    }
}
