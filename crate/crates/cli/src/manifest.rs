use std::time::{SystemTime, UNIX_EPOCH};

use heatroute_core::evaluation::{Lexicon, POI_VERSION};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::scenario::ResolvedConfig;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Provenance of one run. `manifest_id` hashes everything except the
/// timestamps, so identical inputs give identical ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_id: String,
    pub tool_version: String,
    pub lexicon_version: String,
    pub poi_version: String,
    pub base_seed: u64,
    pub backend_id: String,
    pub config: ResolvedConfig,
    pub started_at_unix: u64,
    #[serde(default)]
    pub finished_at_unix: Option<u64>,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(config: ResolvedConfig, backend_id: String) -> Self {
        let lexicon_version = Lexicon::builtin().version().to_string();
        let identity = serde_json::json!({
            "tool_version": TOOL_VERSION,
            "lexicon_version": lexicon_version,
            "poi_version": POI_VERSION,
            "backend_id": backend_id,
            "config": config,
        });
        let manifest_id = sha256_hex(identity.to_string().as_bytes())[..16].to_string();
        RunManifest {
            manifest_id,
            tool_version: TOOL_VERSION.to_string(),
            lexicon_version,
            poi_version: POI_VERSION.to_string(),
            base_seed: config.episode.seed,
            backend_id,
            config,
            started_at_unix: unix_now(),
            finished_at_unix: None,
        }
    }
}
