use serde::{Deserialize, Serialize};

/// Provenance record written next to every simulate run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_digest: String,
    pub tool_version: String,
    pub master_seed: u64,
    pub workers: usize,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
}
