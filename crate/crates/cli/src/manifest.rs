//! The corpus manifest: what each bundled game is expected to do.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerftExpectation {
    pub depth: usize,
    pub counts: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the manifest.
    pub file: String,
    /// Condition number to `pass` or `fail`.
    pub verdicts: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perft: Option<PerftExpectation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complete_plays: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_play_length: Option<u32>,
    /// `deterministic`, `random`, `hidden-info` or `negative:conditionN`.
    pub tags: Vec<String>,
}

impl ManifestEntry {
    pub fn is_negative(&self) -> bool {
        self.negative_condition().is_some()
    }

    /// The condition a negative game is built to violate.
    pub fn negative_condition(&self) -> Option<u8> {
        self.tags.iter().find_map(|t| t.strip_prefix("negative:condition")?.parse().ok())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub games: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn load(path: &Path) -> Result<CorpusManifest, std::io::Error> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }
}
