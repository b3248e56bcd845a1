//! Dispatch a validated configuration to the library, write outputs and
//! the manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use driftlab::experiment::{self, DriftComparisonConfig};
use driftlab::flow::{
    integrate_clipped_multitask, integrate_clipped_single, phase_sweep, sweep_to_csv,
    sweep_to_json, IntegratorConfig,
};
use driftlab::metrics::{drift_matrix, permutation_test, Alternative};
use driftlab::rng::RngStream;
use driftlab::rts::{
    bc_generate, bc_generate_pooled, bc_train, evaluate_winrate, interop_eval, load_attack_table,
    rl_finetune_multitask, rl_finetune_single, Objective, OpponentMode, RtsTrainConfig,
    TabularAgent, TrainingLog, VariantId,
};
use driftlab::signaling::{MultitaskScalarParams, ScalarPolicyPair, SignalingGame};
use driftlab::stochastic::{
    multitask_sgd_train, sgd_train, Baseline, TaskSchedule, TrainConfig,
};

use crate::config::{
    AlternativeKind, BaselineKind, Experiment, ExperimentConfig, Format, Mode, ObjectiveKind,
};
use crate::manifest::RunManifest;
use crate::parallel_map;

/// Failure classification for exit codes: configuration problems exit 2,
/// runtime (I/O, serialization) problems exit 1.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Runtime(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl From<driftlab::Error> for RunError {
    fn from(e: driftlab::Error) -> Self {
        use driftlab::Error::*;
        match e {
            Io(_) | Serialization(_) => RunError::Runtime(e.to_string()),
            _ => RunError::Config(e.to_string()),
        }
    }
}

struct OutputSet<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl<'a> OutputSet<'a> {
    fn new(dir: &'a Path) -> Result<Self, RunError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| RunError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| RunError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| RunError::Runtime(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }
}

fn parse_variant(s: &str) -> Result<VariantId, RunError> {
    s.parse::<VariantId>().map_err(RunError::from)
}

fn parse_variants(list: &[String]) -> Result<Vec<VariantId>, RunError> {
    list.iter().map(|s| parse_variant(s)).collect()
}

fn integrator_config(cfg: &ExperimentConfig) -> IntegratorConfig {
    IntegratorConfig {
        step: cfg.dt.unwrap_or(1e-3),
        horizon: cfg.horizon.unwrap_or(50.0),
        sample_every: cfg.sample_every.unwrap_or(1),
        ..IntegratorConfig::default()
    }
}

fn train_config(cfg: &ExperimentConfig) -> TrainConfig {
    TrainConfig {
        learning_rate: cfg.alpha.unwrap_or(0.05),
        episodes: cfg.episodes.unwrap_or(20_000),
        batch_size: cfg.batch_size.unwrap_or(32),
        baseline: match cfg.baseline.unwrap_or(BaselineKind::None) {
            BaselineKind::None => Baseline::None,
            BaselineKind::MovingAverage => Baseline::MovingAverage {
                decay: cfg.baseline_decay.unwrap_or(0.9),
            },
        },
        task_schedule: TaskSchedule::RoundRobin,
    }
}

fn rts_train_config(cfg: &ExperimentConfig) -> RtsTrainConfig {
    RtsTrainConfig {
        episodes_per_env: cfg.episodes_per_env.unwrap_or(20_000),
        batch_size: cfg.batch_size.unwrap_or(32),
        learning_rate: cfg.learning_rate.unwrap_or(0.2),
        executor_lr_scale: cfg.executor_lr_scale.unwrap_or(1.0),
        baseline_decay: cfg.baseline_decay.unwrap_or(0.9),
        objective: match cfg.objective.unwrap_or(ObjectiveKind::Reinforce) {
            ObjectiveKind::Reinforce => Objective::Reinforce,
            ObjectiveKind::Ppo => Objective::PpoClip {
                clip: 0.2,
                epochs: 4,
            },
        },
        opponent_mode: OpponentMode::Cycling,
        log_every: 1,
    }
}

fn load_agent(path: &str) -> Result<TabularAgent, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Runtime(format!("cannot read {path}: {e}")))?;
    let agent: TabularAgent = serde_json::from_str(&text)
        .map_err(|e| RunError::Config(format!("bad agent file {path}: {e}")))?;
    if agent.logits.iter().flatten().any(|z| !z.is_finite()) {
        return Err(RunError::Config(format!("agent file {path} has non-finite logits")));
    }
    Ok(agent)
}

fn agent_json(agent: &TabularAgent) -> serde_json::Value {
    serde_json::to_value(agent).expect("agent serializes")
}

fn budget_map(log: &TrainingLog) -> BTreeMap<String, usize> {
    log.episodes_per_variant
        .iter()
        .map(|(v, n)| (v.name().to_string(), *n))
        .collect()
}

fn read_samples(path: &str) -> Result<Vec<f64>, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Runtime(format!("cannot read {path}: {e}")))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) => values.push(v),
            // tolerate one header line
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(RunError::Config(format!(
                    "{path}:{}: not a number: {line:?}",
                    i + 1
                )))
            }
        }
    }
    if values.is_empty() {
        return Err(RunError::Config(format!("{path} contains no samples")));
    }
    Ok(values)
}

/// Run one experiment: write its data files and manifest into `out_dir`
/// and return the manifest. Output bytes are independent of `jobs`.
pub fn execute(
    config: &ExperimentConfig,
    jobs: usize,
    out_dir: &Path,
) -> Result<RunManifest, RunError> {
    config.validate().map_err(RunError::Config)?;
    let start = Instant::now();
    let mut outputs = OutputSet::new(out_dir)?;
    let mut manifest = RunManifest::new(config.clone());

    match config.experiment {
        Experiment::Flow => run_flow(config, &mut outputs)?,
        Experiment::Sweep => run_sweep(config, jobs, &mut outputs)?,
        Experiment::Sgd => run_sgd(config, jobs, &mut outputs)?,
        Experiment::RtsBc => run_rts_bc(config, &mut outputs)?,
        Experiment::RtsTrain => {
            let budget = run_rts_train(config, &mut outputs)?;
            let parity = budget.values().collect::<std::collections::BTreeSet<_>>().len() <= 1;
            manifest.budget = Some(budget);
            manifest.budget_parity = Some(parity);
        }
        Experiment::RtsEval => run_eval(config, false, &mut outputs)?,
        Experiment::Interop => run_eval(config, true, &mut outputs)?,
        Experiment::Drift => run_drift(config, &mut outputs)?,
        Experiment::Permtest => run_permtest(config, &mut outputs)?,
        Experiment::DriftComparison => {
            let (budget, parity) = run_drift_comparison(config, jobs, &mut outputs)?;
            manifest.budget = Some(budget);
            manifest.budget_parity = Some(parity);
        }
    }

    manifest.outputs = outputs.written.clone();
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    let manifest_json =
        serde_json::to_value(&manifest).map_err(|e| RunError::Runtime(e.to_string()))?;
    outputs.write_json("manifest.json", &manifest_json)?;
    Ok(manifest)
}

fn run_flow(config: &ExperimentConfig, outputs: &mut OutputSet) -> Result<(), RunError> {
    let icfg = integrator_config(config);
    let lambda0 = config.lambda0.expect("validated");
    let sigma0s: Vec<f64> = config
        .sigma0_list
        .clone()
        .or_else(|| config.sigma0.map(|s| vec![s]))
        .expect("validated");
    let multi_file = sigma0s.len() > 1;
    for (k, &sigma0) in sigma0s.iter().enumerate() {
        let (csv, json) = match config.mode.expect("validated") {
            Mode::Single => {
                let traj = integrate_clipped_single(
                    ScalarPolicyPair {
                        sigma: sigma0,
                        lambda: lambda0,
                    },
                    &icfg,
                )?;
                (traj.to_csv(), traj.to_json())
            }
            Mode::Multitask => {
                let traj = integrate_clipped_multitask(
                    MultitaskScalarParams {
                        sigma1: sigma0,
                        sigma2: sigma0,
                        lambda: lambda0,
                    },
                    &icfg,
                )?;
                (traj.to_csv(), traj.to_json())
            }
        };
        let stem = if multi_file {
            format!("flow_{k}")
        } else {
            "flow".to_string()
        };
        match config.output_format {
            Format::Csv => outputs.write(&format!("{stem}.csv"), &csv)?,
            Format::Json => outputs.write_json(&format!("{stem}.json"), &json)?,
        }
    }
    Ok(())
}

fn run_sweep(
    config: &ExperimentConfig,
    jobs: usize,
    outputs: &mut OutputSet,
) -> Result<(), RunError> {
    let n = config.resolution.expect("validated");
    let icfg = integrator_config(config);
    let mode = match config.mode.expect("validated") {
        Mode::Single => driftlab::signaling::FlowMode::SingleTask,
        Mode::Multitask => driftlab::signaling::FlowMode::Multitask,
    };
    icfg.validate()?;
    let cells = if jobs <= 1 {
        phase_sweep(n, mode, &icfg)?
    } else {
        parallel_map(n * n, jobs, |idx| {
            let (i, j) = (idx / n, idx % n);
            driftlab::flow::sweep_cell(
                mode,
                driftlab::flow::grid_coordinate(i, n),
                driftlab::flow::grid_coordinate(j, n),
                &icfg,
            )
        })
    };
    match config.output_format {
        Format::Csv => outputs.write("sweep.csv", &sweep_to_csv(&cells))?,
        Format::Json => outputs.write_json("sweep.json", &sweep_to_json(&cells))?,
    }
    Ok(())
}

fn run_sgd(config: &ExperimentConfig, jobs: usize, outputs: &mut OutputSet) -> Result<(), RunError> {
    let tcfg = train_config(config);
    tcfg.validate()?;
    let n_seeds = config.n_seeds.unwrap_or(1);
    let sigma0 = config.sigma0.expect("validated");
    let lambda0 = config.lambda0.expect("validated");
    let master = config.master_seed;
    let game = SignalingGame::preset_r(2);
    let game_prime = SignalingGame::preset_r_prime(2);

    match config.mode.expect("validated") {
        Mode::Single => {
            let runs: Vec<_> = parallel_map(n_seeds, jobs, |k| {
                sgd_train(
                    ScalarPolicyPair {
                        sigma: sigma0,
                        lambda: lambda0,
                    },
                    &game,
                    &tcfg,
                    RngStream::new(master, k as u64),
                )
            });
            let mut summaries = Vec::new();
            for (k, run) in runs.into_iter().enumerate() {
                let run = run?;
                outputs.write(&format!("sgd_seed{k}.csv"), &run.to_csv(k as u64))?;
                summaries.push(run.summary_json(k as u64));
            }
            outputs.write_json("sgd_summary.json", &serde_json::json!(summaries))?;
        }
        Mode::Multitask => {
            let runs: Vec<_> = parallel_map(n_seeds, jobs, |k| {
                multitask_sgd_train(
                    MultitaskScalarParams {
                        sigma1: sigma0,
                        sigma2: sigma0,
                        lambda: lambda0,
                    },
                    (&game, &game_prime),
                    &tcfg,
                    RngStream::new(master, k as u64),
                )
            });
            let mut summaries = Vec::new();
            for (k, run) in runs.into_iter().enumerate() {
                let run = run?;
                outputs.write(&format!("sgd_seed{k}.csv"), &run.to_csv(k as u64))?;
                summaries.push(run.summary_json(k as u64));
            }
            outputs.write_json("sgd_summary.json", &serde_json::json!(summaries))?;
        }
    }
    Ok(())
}

fn run_rts_bc(config: &ExperimentConfig, outputs: &mut OutputSet) -> Result<(), RunError> {
    let variant = parse_variant(config.variant.as_deref().expect("validated"))?;
    let table = load_attack_table(variant);
    let mut rng = RngStream::new(config.master_seed, 0).rng();
    let data = bc_generate(
        &table,
        config.bc_n.unwrap_or(2_000),
        config.bc_epsilon.unwrap_or(0.0),
        &mut rng,
    )?;
    let (instructor, executor) = bc_train(
        &data,
        config.bc_steps.unwrap_or(500),
        config.bc_lr.unwrap_or(0.5),
    )?;
    outputs.write_json("bc_instructor.json", &agent_json(&instructor))?;
    outputs.write_json("bc_executor.json", &agent_json(&executor))?;
    outputs.write_json(
        "bc_summary.json",
        &serde_json::json!({
            "variant": variant.name(),
            "triples": data.triples.len(),
            "noise_rate": data.noise_rate,
            "instructor_argmax": instructor.argmax_map(),
            "executor_argmax": executor.argmax_map(),
            "executor_diag_conditionals": executor.diag_conditionals(),
        }),
    )?;
    Ok(())
}

fn run_rts_train(
    config: &ExperimentConfig,
    outputs: &mut OutputSet,
) -> Result<BTreeMap<String, usize>, RunError> {
    let tcfg = rts_train_config(config);
    tcfg.validate()?;
    let master = config.master_seed;
    let bc_stream = RngStream::new(master, 0);
    let train_stream = RngStream::new(master, 1);

    let bc_pair = |variants: &[VariantId]| -> Result<(TabularAgent, TabularAgent), RunError> {
        let n = config.bc_n.unwrap_or(2_000);
        let data = bc_generate_pooled(
            variants,
            (n / variants.len()).max(1),
            config.bc_epsilon.unwrap_or(0.0),
            &mut bc_stream.rng(),
        )?;
        Ok(bc_train(
            &data,
            config.bc_steps.unwrap_or(500),
            config.bc_lr.unwrap_or(0.5),
        )?)
    };

    match config.mode.expect("validated") {
        Mode::Single => {
            let variant = parse_variant(config.variant.as_deref().expect("validated"))?;
            let (bc_instructor, bc_executor) = bc_pair(&[variant])?;
            let instructor = match &config.instructor_path {
                Some(p) => load_agent(p)?,
                None => bc_instructor,
            };
            let executor = match &config.executor_path {
                Some(p) => load_agent(p)?,
                None => bc_executor,
            };
            let (instructor, executor, log) =
                rl_finetune_single(instructor, executor, variant, &tcfg, train_stream)?;
            outputs.write_json("instructor.json", &agent_json(&instructor))?;
            outputs.write_json("executor.json", &agent_json(&executor))?;
            outputs.write("train_log.csv", &log.to_csv())?;
            Ok(budget_map(&log))
        }
        Mode::Multitask => {
            let variants = parse_variants(config.variants.as_ref().expect("validated"))?;
            let (bc_instructor, bc_executor) = bc_pair(&variants)?;
            let instructor_init = match &config.instructor_path {
                Some(p) => load_agent(p)?,
                None => bc_instructor,
            };
            let executor = match &config.executor_path {
                Some(p) => load_agent(p)?,
                None => bc_executor,
            };
            let (instructors, executor, log) = rl_finetune_multitask(
                executor,
                &variants,
                &instructor_init,
                &tcfg,
                train_stream,
            )?;
            for (v, instr) in variants.iter().zip(&instructors) {
                outputs.write_json(&format!("instructor_{}.json", v.name()), &agent_json(instr))?;
            }
            outputs.write_json("executor.json", &agent_json(&executor))?;
            outputs.write("train_log.csv", &log.to_csv())?;
            Ok(budget_map(&log))
        }
    }
}

fn run_eval(
    config: &ExperimentConfig,
    cross_paired: bool,
    outputs: &mut OutputSet,
) -> Result<(), RunError> {
    let instructor = load_agent(config.instructor_path.as_deref().expect("validated"))?;
    let executor = load_agent(config.executor_path.as_deref().expect("validated"))?;
    let variant = parse_variant(config.variant.as_deref().expect("validated"))?;
    let n_games = config.n_games.unwrap_or(2_000);
    let stream = RngStream::new(config.master_seed, 0);
    let rate = if cross_paired {
        interop_eval(&instructor, &executor, variant, n_games, stream)?
    } else {
        evaluate_winrate(&instructor, &executor, variant, n_games, stream)?
    };
    let name = if cross_paired { "interop.json" } else { "eval.json" };
    outputs.write_json(
        name,
        &serde_json::json!({
            "variant": variant.name(),
            "n_games": n_games,
            "win_rate": rate,
            "cross_paired": cross_paired,
        }),
    )?;
    Ok(())
}

fn run_drift(config: &ExperimentConfig, outputs: &mut OutputSet) -> Result<(), RunError> {
    let executor = load_agent(config.executor_path.as_deref().expect("validated"))?;
    let n_samples = config.n_samples.unwrap_or(20_000);
    let mut rng = RngStream::new(config.master_seed, 0).rng();
    let matrix = drift_matrix(&executor, None, n_samples, &mut rng)?;
    match config.output_format {
        Format::Csv => outputs.write("drift_matrix.csv", &matrix.to_csv())?,
        Format::Json => outputs.write_json("drift_matrix.json", &matrix.to_json())?,
    }
    // the scalar measure and exact diagnostics ride along either way
    let diag = driftlab::metrics::executor_drift_flag(&executor);
    outputs.write_json(
        "drift_summary.json",
        &serde_json::json!({
            "off_diagonal_mass": driftlab::metrics::off_diagonal_mass(&matrix),
            "drifted": diag.drifted,
            "diagonal_conditionals": diag.diagonal_conditionals,
            "insufficient_samples": matrix.insufficient_samples,
        }),
    )?;
    Ok(())
}

fn run_permtest(config: &ExperimentConfig, outputs: &mut OutputSet) -> Result<(), RunError> {
    let a = read_samples(config.a_path.as_deref().expect("validated"))?;
    let b = read_samples(config.b_path.as_deref().expect("validated"))?;
    let alternative = match config.alternative.unwrap_or(AlternativeKind::TwoSided) {
        AlternativeKind::Greater => Alternative::Greater,
        AlternativeKind::TwoSided => Alternative::TwoSided,
    };
    let mut rng = RngStream::new(config.master_seed, 0).rng();
    let result = permutation_test(&a, &b, config.n_perm.unwrap_or(10_000), alternative, &mut rng)?;
    outputs.write_json("permtest.json", &result.to_json())?;
    Ok(())
}

fn run_drift_comparison(
    config: &ExperimentConfig,
    jobs: usize,
    outputs: &mut OutputSet,
) -> Result<(BTreeMap<String, usize>, bool), RunError> {
    let mut dc: DriftComparisonConfig = config
        .drift_comparison
        .clone()
        .unwrap_or_default();
    dc.master_seed = config.master_seed;
    dc.validate()?;
    let results = parallel_map(dc.n_seeds, jobs, |s| experiment::run_paired_seed(&dc, s));
    let outcomes: Result<Vec<_>, _> = results.into_iter().collect();
    let summary = experiment::summarize(&dc, outcomes?)?;

    outputs.write("outcomes.csv", &experiment::outcomes_to_csv(&summary.outcomes))?;
    outputs.write_json("mass_test.json", &summary.mass_test.to_json())?;
    outputs.write_json("interop_test.json", &summary.interop_test.to_json())?;
    outputs.write_json(
        "comparison_summary.json",
        &serde_json::to_value(&summary).map_err(|e| RunError::Runtime(e.to_string()))?,
    )?;

    let mut budget = BTreeMap::new();
    for o in &summary.outcomes {
        for (v, n) in o.single_budget.iter().chain(&o.multi_budget) {
            budget.insert(format!("seed{}/{}", o.seed, v.name()), *n);
        }
    }
    Ok((budget, summary.budget_parity))
}

/// Convenience wrapper used by `main`: resolve the preset name and run it.
pub fn execute_preset(
    name: &str,
    master_seed: Option<u64>,
    jobs: usize,
    out_dir: &Path,
) -> Result<RunManifest, RunError> {
    let mut config = crate::presets::preset(name).map_err(RunError::Config)?;
    if let Some(seed) = master_seed {
        config.master_seed = seed;
    }
    let out = out_dir.join(name);
    execute(&config, jobs, &out)
}

/// Resolve the output directory: explicit flag, then the config's
/// `output_path`, then a default.
pub fn resolve_out_dir(flag: Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| config.output_path.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("driftlab-out"))
}
