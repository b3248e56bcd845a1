//! The run manifest written alongside every output set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub version: String,
    /// Wall clock; excluded from reproducibility comparisons.
    pub duration_seconds: f64,
    /// Data files produced by the run, relative to the output directory.
    pub outputs: Vec<String>,
    /// Episodes consumed per training environment, when the run trains.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BTreeMap<String, usize>>,
    /// Whether every training environment received the same episode
    /// budget; set for comparison runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_parity: Option<bool>,
}

impl RunManifest {
    pub fn new(config: ExperimentConfig) -> Self {
        Self {
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration_seconds: 0.0,
            outputs: Vec::new(),
            budget: None,
            budget_parity: None,
        }
    }
}
