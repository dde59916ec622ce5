use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::manifest_path;

/// Provenance record written next to, or inside, every output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, config: Value, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            config,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}

/// Seed recorded alongside a data file by `simulate`, if there is one.
pub fn input_seed(data: &Path) -> Option<u64> {
    let text = fs::read_to_string(manifest_path(data)).ok()?;
    serde_json::from_str::<RunManifest>(&text).ok()?.seed
}
