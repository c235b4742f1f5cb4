use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cluster::ClusterReport;
use super::play::PlayReport;
use crate::error::{CoreError, Result};

/// Everything one evaluation run produced, plus the configuration behind it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: serde_json::Value,
    /// Game-playing results keyed by split name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub play: BTreeMap<String, PlayReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snn_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snn_pairs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clustering: Option<ClusterReport>,
}

impl EvalReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CoreError::invalid(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| CoreError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CoreError::invalid(format!("{}: {e}", path.display())))
    }
}
