//! Named experiment presets for the headline checks.

use driftlab::experiment::DriftComparisonConfig;

use crate::config::{Experiment, ExperimentConfig, Mode};

pub const PRESET_NAMES: [&str; 3] = ["prop1-grid", "prop2-independence", "rts-drift-comparison"];

/// Fully-populated configuration for a named preset.
pub fn preset(name: &str) -> Result<ExperimentConfig, String> {
    match name {
        // 101x101 interior grid, analytic vs clipped-RK4 classification
        "prop1-grid" => {
            let mut cfg = ExperimentConfig::new(Experiment::Sweep);
            cfg.mode = Some(Mode::Single);
            cfg.resolution = Some(101);
            Ok(cfg)
        }
        // multitask flow from four instructor initializations sharing one
        // executor initialization: the lambda paths must coincide
        "prop2-independence" => {
            let mut cfg = ExperimentConfig::new(Experiment::Flow);
            cfg.mode = Some(Mode::Multitask);
            cfg.sigma0_list = Some(vec![0.05, 0.3, 0.5, 0.95]);
            cfg.lambda0 = Some(0.7);
            cfg.horizon = Some(20.0);
            Ok(cfg)
        }
        // 20 paired seeds, multitask {Original, B, C} vs single-task
        // Original, equal per-environment budgets
        "rts-drift-comparison" => {
            let mut cfg = ExperimentConfig::new(Experiment::DriftComparison);
            cfg.drift_comparison = Some(DriftComparisonConfig::default());
            Ok(cfg)
        }
        other => Err(format!(
            "unknown preset {other:?}; known presets: {}",
            PRESET_NAMES.join(", ")
        )),
    }
}
