//! The experiment configuration schema: one JSON document (or the
//! equivalent CLI flags) describes any run. Unknown keys are rejected;
//! per-experiment required fields are validated before execution.

use serde::{Deserialize, Serialize};

use driftlab::experiment::DriftComparisonConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum Experiment {
    Flow,
    Sweep,
    Sgd,
    RtsBc,
    RtsTrain,
    RtsEval,
    Interop,
    Drift,
    Permtest,
    /// Paired-seed single-task vs multitask comparison.
    DriftComparison,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum Mode {
    Single,
    Multitask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum BaselineKind {
    None,
    MovingAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    Reinforce,
    Ppo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum AlternativeKind {
    Greater,
    TwoSided,
}

fn default_seed() -> u64 {
    0
}

fn default_format() -> Format {
    Format::Csv
}

/// One run of one experiment. Fields irrelevant to the chosen experiment
/// may stay unset; `validate` enforces the required ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub mode: Option<Mode>,

    // flow / sweep / sgd initial parameters
    #[serde(default)]
    pub sigma0: Option<f64>,
    #[serde(default)]
    pub lambda0: Option<f64>,
    /// Several instructor initializations for one flow config (one
    /// trajectory file each).
    #[serde(default)]
    pub sigma0_list: Option<Vec<f64>>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub sample_every: Option<usize>,
    #[serde(default)]
    pub resolution: Option<usize>,

    // stochastic training
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub episodes: Option<usize>,
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub baseline: Option<BaselineKind>,
    #[serde(default)]
    pub baseline_decay: Option<f64>,
    #[serde(default)]
    pub n_seeds: Option<usize>,

    // rts
    #[serde(default)]
    pub variant: Option<String>,
    #[serde(default)]
    pub variants: Option<Vec<String>>,
    #[serde(default)]
    pub episodes_per_env: Option<usize>,
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default)]
    pub executor_lr_scale: Option<f64>,
    #[serde(default)]
    pub objective: Option<ObjectiveKind>,
    #[serde(default)]
    pub bc_n: Option<usize>,
    #[serde(default)]
    pub bc_epsilon: Option<f64>,
    #[serde(default)]
    pub bc_steps: Option<usize>,
    #[serde(default)]
    pub bc_lr: Option<f64>,
    #[serde(default)]
    pub instructor_path: Option<String>,
    #[serde(default)]
    pub executor_path: Option<String>,
    #[serde(default)]
    pub n_games: Option<usize>,
    #[serde(default)]
    pub n_samples: Option<usize>,

    // permutation test
    #[serde(default)]
    pub a_path: Option<String>,
    #[serde(default)]
    pub b_path: Option<String>,
    #[serde(default)]
    pub n_perm: Option<usize>,
    #[serde(default)]
    pub alternative: Option<AlternativeKind>,

    /// Full nested configuration for the drift-comparison experiment; its
    /// master seed is overridden by the run's master seed.
    #[serde(default)]
    pub drift_comparison: Option<DriftComparisonConfig>,

    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub output_path: Option<String>,
    #[serde(default = "default_format")]
    pub output_format: Format,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            mode: None,
            sigma0: None,
            lambda0: None,
            sigma0_list: None,
            horizon: None,
            dt: None,
            sample_every: None,
            resolution: None,
            alpha: None,
            episodes: None,
            batch_size: None,
            baseline: None,
            baseline_decay: None,
            n_seeds: None,
            variant: None,
            variants: None,
            episodes_per_env: None,
            learning_rate: None,
            executor_lr_scale: None,
            objective: None,
            bc_n: None,
            bc_epsilon: None,
            bc_steps: None,
            bc_lr: None,
            instructor_path: None,
            executor_path: None,
            n_games: None,
            n_samples: None,
            a_path: None,
            b_path: None,
            n_perm: None,
            alternative: None,
            drift_comparison: None,
            master_seed: 0,
            output_path: None,
            output_format: Format::Csv,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn require<T>(field: Option<T>, name: &str, experiment: &str) -> Result<T, String> {
        field.ok_or_else(|| format!("{experiment} requires `{name}`"))
    }

    /// Check that every field the experiment needs is present and sane.
    pub fn validate(&self) -> Result<(), String> {
        use Experiment::*;
        let check_unit = |v: Option<f64>, name: &str| -> Result<(), String> {
            if let Some(x) = v {
                if !(0.0..=1.0).contains(&x) {
                    return Err(format!("`{name}` = {x} must lie in [0,1]"));
                }
            }
            Ok(())
        };
        check_unit(self.sigma0, "sigma0")?;
        check_unit(self.lambda0, "lambda0")?;
        for v in self.sigma0_list.iter().flatten() {
            check_unit(Some(*v), "sigma0_list entry")?;
        }
        match self.experiment {
            Flow => {
                Self::require(self.mode, "mode", "flow")?;
                if self.sigma0.is_none() && self.sigma0_list.is_none() {
                    return Err("flow requires `sigma0` or `sigma0_list`".into());
                }
                Self::require(self.lambda0, "lambda0", "flow")?;
            }
            Sweep => {
                Self::require(self.mode, "mode", "sweep")?;
                let n = Self::require(self.resolution, "resolution", "sweep")?;
                if n < 2 {
                    return Err(format!("sweep resolution {n} must be >= 2"));
                }
            }
            Sgd => {
                Self::require(self.mode, "mode", "sgd")?;
                Self::require(self.sigma0, "sigma0", "sgd")?;
                Self::require(self.lambda0, "lambda0", "sgd")?;
            }
            RtsBc => {
                Self::require(self.variant.as_deref(), "variant", "rts-bc")?;
            }
            RtsTrain => {
                let mode = Self::require(self.mode, "mode", "rts-train")?;
                match mode {
                    Mode::Single => {
                        Self::require(self.variant.as_deref(), "variant", "rts-train")?;
                    }
                    Mode::Multitask => {
                        let vs = Self::require(self.variants.as_ref(), "variants", "rts-train")?;
                        if vs.len() < 2 {
                            return Err("multitask rts-train needs at least 2 variants".into());
                        }
                    }
                }
            }
            RtsEval | Interop => {
                Self::require(self.instructor_path.as_deref(), "instructor_path", "evaluation")?;
                Self::require(self.executor_path.as_deref(), "executor_path", "evaluation")?;
                Self::require(self.variant.as_deref(), "variant", "evaluation")?;
            }
            Drift => {
                Self::require(self.executor_path.as_deref(), "executor_path", "drift")?;
            }
            Permtest => {
                Self::require(self.a_path.as_deref(), "a_path", "permtest")?;
                Self::require(self.b_path.as_deref(), "b_path", "permtest")?;
            }
            DriftComparison => {
                if let Some(dc) = &self.drift_comparison {
                    dc.validate().map_err(|e| e.to_string())?;
                }
            }
        }
        Ok(())
    }
}
