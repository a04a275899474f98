//! Run manifests: the resolved configuration echo, input/output digests and
//! per-stage timings every command writes next to its artifacts. Re-running
//! a command with `--config <manifest>` reproduces the outputs bit-exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub wall_clock_s: BTreeMap<String, f64>,
}

/// Collects digests and timings while a command runs, then writes
/// `manifest.json` into the output directory.
pub struct ManifestBuilder {
    command: String,
    config: serde_json::Value,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    stages: BTreeMap<String, f64>,
    out_dir: PathBuf,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new<C: Serialize>(command: &str, config: &C, out_dir: &Path) -> Result<Self, CliError> {
        Ok(ManifestBuilder {
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            stages: BTreeMap::new(),
            out_dir: out_dir.to_path_buf(),
            started: Instant::now(),
        })
    }

    pub fn record_input_bytes(&mut self, label: &str, bytes: &[u8]) {
        self.inputs.insert(label.to_string(), sha256_hex(bytes));
    }

    pub fn stage_done(&mut self, name: &str) {
        let elapsed = self.started.elapsed().as_secs_f64();
        let consumed: f64 = self.stages.values().sum();
        self.stages.insert(name.to_string(), elapsed - consumed);
    }

    /// Write a file under the output directory and digest it.
    pub fn write_output(&mut self, rel: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::io(&format!("creating {}", parent.display()), e))?;
        }
        fs::write(&path, contents)
            .map_err(|e| CliError::io(&format!("writing {}", path.display()), e))?;
        self.outputs.insert(rel.to_string(), sha256_hex(contents));
        Ok(path)
    }

    pub fn finish(mut self, tool_version: &str) -> Result<(), CliError> {
        self.stage_done("finalize");
        let manifest = RunManifest {
            tool: format!("mpsched {tool_version}"),
            command: self.command,
            config: self.config,
            inputs: self.inputs,
            outputs: self.outputs,
            wall_clock_s: self.stages,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.out_dir.join("manifest.json");
        fs::write(&path, text)
            .map_err(|e| CliError::io(&format!("writing {}", path.display()), e))?;
        Ok(())
    }
}

/// Load a per-command config from `--config`: either a bare config document
/// or a manifest written by a previous run of the same command.
pub fn load_config<C: DeserializeOwned>(path: &Path, command: &str) -> Result<C, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::io(&format!("reading {}", path.display()), e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let config_value = match (value.get("command"), value.get("config")) {
        (Some(cmd), Some(cfg)) => {
            let cmd = cmd.as_str().unwrap_or_default();
            if cmd != command {
                return Err(CliError::Validation(format!(
                    "manifest {} was written by `{cmd}`, not `{command}`",
                    path.display()
                )));
            }
            cfg.clone()
        }
        _ => value,
    };
    Ok(serde_json::from_value(config_value)?)
}
