use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use tasksets_core::tasksets::Registry;

use crate::io::{sha256_hex, FileDigest, OutDir};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOOL: &str = "tasksets";

/// Provenance record written into every output directory. Everything except
/// `timestamp_unix` is a function of the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub registry_hash: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    /// Digests of generated data files, where a command records them.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<FileDigest>,
    pub master_seed: Option<u64>,
    pub timestamp_unix: u64,
}

pub fn registry_hash(registry: &Registry) -> String {
    sha256_hex(registry.dump().as_bytes())
}

/// `SOURCE_DATE_EPOCH` when set, otherwise the wall clock.
fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0))
}

impl RunManifest {
    pub fn new(
        command: &str,
        registry: &Registry,
        config: serde_json::Value,
        mut inputs: Vec<FileDigest>,
        master_seed: Option<u64>,
    ) -> Self {
        inputs.sort();
        RunManifest {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            registry_hash: registry_hash(registry),
            config,
            inputs,
            outputs: Vec::new(),
            master_seed,
            timestamp_unix: timestamp(),
        }
    }

    pub fn with_outputs(mut self, mut outputs: Vec<FileDigest>) -> Self {
        outputs.sort();
        self.outputs = outputs;
        self
    }

    pub fn write(&self, out: &OutDir) -> anyhow::Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        out.write(MANIFEST_FILE, s.as_bytes())?;
        Ok(())
    }
}
