use std::path::Path;

use epiclose::config::ExperimentConfig;
use epiclose::io;
use epiclose::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: String,
    config_sha256: String,
    seed: u64,
    arguments: Vec<String>,
    config: &'a ExperimentConfig,
}

pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let text = serde_json::to_string(cfg)?;
    Ok(format!("{:x}", Sha256::digest(text.as_bytes())))
}

/// Records what produced the files in `dir`.
pub fn write(dir: &Path, command: &str, cfg: &ExperimentConfig) -> Result<()> {
    let m = Manifest {
        command,
        version: format!("epiclose {}", env!("CARGO_PKG_VERSION")),
        config_sha256: config_hash(cfg)?,
        seed: cfg.seed,
        arguments: std::env::args().skip(1).collect(),
        config: cfg,
    };
    io::write_json(&dir.join("manifest.json"), &m)
}
