//! `driftlab`: signaling-game drift experiments from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use driftlab_cli::config::{
    AlternativeKind, BaselineKind, Experiment, ExperimentConfig, Format, Mode, ObjectiveKind,
};
use driftlab_cli::runner::{execute, execute_preset, resolve_out_dir, RunError};

#[derive(Parser)]
#[command(
    name = "driftlab",
    version,
    about = "Learning-dynamics experiments for instructor/executor signaling games"
)]
struct Cli {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (DRIFTLAB_SEED overrides).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; output bytes do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Data file format where both renderings exist.
    #[arg(long, global = true)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by --config.
    Run,
    /// Clipped flow trajectory from one initialization.
    Flow {
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        sigma0: Option<f64>,
        #[arg(long)]
        lambda0: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        sample_every: Option<usize>,
    },
    /// Phase-diagram grid: analytic vs numerical drift classification.
    Sweep {
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Stochastic policy-gradient training of the scalar game.
    Sgd {
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        sigma0: Option<f64>,
        #[arg(long)]
        lambda0: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        baseline: Option<BaselineKind>,
        #[arg(long)]
        baseline_decay: Option<f64>,
        #[arg(long)]
        n_seeds: Option<usize>,
    },
    /// Behavior-clone instructor and executor for one variant.
    RtsBc {
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        bc_n: Option<usize>,
        #[arg(long)]
        bc_epsilon: Option<f64>,
        #[arg(long)]
        bc_steps: Option<usize>,
        #[arg(long)]
        bc_lr: Option<f64>,
    },
    /// RL fine-tuning, single-task or multitask.
    RtsTrain {
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        variant: Option<String>,
        /// Comma-separated variant list for multitask training.
        #[arg(long, value_delimiter = ',')]
        variants: Option<Vec<String>>,
        #[arg(long)]
        episodes_per_env: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        executor_lr_scale: Option<f64>,
        #[arg(long)]
        objective: Option<ObjectiveKind>,
        #[arg(long)]
        instructor: Option<String>,
        #[arg(long)]
        executor: Option<String>,
        #[arg(long)]
        bc_n: Option<usize>,
        #[arg(long)]
        bc_epsilon: Option<f64>,
        #[arg(long)]
        bc_steps: Option<usize>,
    },
    /// Win rate of an instructor/executor pair against the opponent pool.
    RtsEval {
        #[arg(long)]
        instructor: Option<String>,
        #[arg(long)]
        executor: Option<String>,
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        n_games: Option<usize>,
    },
    /// Win rate of a cross-paired (foreign instructor) team.
    Interop {
        #[arg(long)]
        instructor: Option<String>,
        #[arg(long)]
        executor: Option<String>,
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        n_games: Option<usize>,
    },
    /// Message-action drift matrix of an executor.
    Drift {
        #[arg(long)]
        executor: Option<String>,
        #[arg(long)]
        n_samples: Option<usize>,
    },
    /// Two-sample permutation test over win/loss or measurement files.
    Permtest {
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
        #[arg(long)]
        n_perm: Option<usize>,
        #[arg(long)]
        alternative: Option<AlternativeKind>,
    },
    /// Paired-seed single-task vs multitask drift comparison.
    DriftComparison {
        #[arg(long)]
        n_seeds: Option<usize>,
        #[arg(long)]
        episodes_per_env: Option<usize>,
    },
    /// Run a named preset (prop1-grid, prop2-independence,
    /// rts-drift-comparison).
    Preset {
        name: String,
        /// Print the expanded configuration instead of running it.
        #[arg(long)]
        show: bool,
    },
}

impl Command {
    fn experiment(&self) -> Option<Experiment> {
        match self {
            Command::Run | Command::Preset { .. } => None,
            Command::Flow { .. } => Some(Experiment::Flow),
            Command::Sweep { .. } => Some(Experiment::Sweep),
            Command::Sgd { .. } => Some(Experiment::Sgd),
            Command::RtsBc { .. } => Some(Experiment::RtsBc),
            Command::RtsTrain { .. } => Some(Experiment::RtsTrain),
            Command::RtsEval { .. } => Some(Experiment::RtsEval),
            Command::Interop { .. } => Some(Experiment::Interop),
            Command::Drift { .. } => Some(Experiment::Drift),
            Command::Permtest { .. } => Some(Experiment::Permtest),
            Command::DriftComparison { .. } => Some(Experiment::DriftComparison),
        }
    }

    /// Overlay this subcommand's flags onto the configuration.
    fn apply(&self, cfg: &mut ExperimentConfig) {
        fn set<T: Clone>(dst: &mut Option<T>, src: &Option<T>) {
            if src.is_some() {
                *dst = src.clone();
            }
        }
        match self {
            Command::Run | Command::Preset { .. } => {}
            Command::Flow {
                mode,
                sigma0,
                lambda0,
                horizon,
                dt,
                sample_every,
            } => {
                set(&mut cfg.mode, mode);
                set(&mut cfg.sigma0, sigma0);
                set(&mut cfg.lambda0, lambda0);
                set(&mut cfg.horizon, horizon);
                set(&mut cfg.dt, dt);
                set(&mut cfg.sample_every, sample_every);
            }
            Command::Sweep {
                mode,
                resolution,
                horizon,
                dt,
            } => {
                set(&mut cfg.mode, mode);
                set(&mut cfg.resolution, resolution);
                set(&mut cfg.horizon, horizon);
                set(&mut cfg.dt, dt);
            }
            Command::Sgd {
                mode,
                sigma0,
                lambda0,
                alpha,
                episodes,
                batch_size,
                baseline,
                baseline_decay,
                n_seeds,
            } => {
                set(&mut cfg.mode, mode);
                set(&mut cfg.sigma0, sigma0);
                set(&mut cfg.lambda0, lambda0);
                set(&mut cfg.alpha, alpha);
                set(&mut cfg.episodes, episodes);
                set(&mut cfg.batch_size, batch_size);
                set(&mut cfg.baseline, baseline);
                set(&mut cfg.baseline_decay, baseline_decay);
                set(&mut cfg.n_seeds, n_seeds);
            }
            Command::RtsBc {
                variant,
                bc_n,
                bc_epsilon,
                bc_steps,
                bc_lr,
            } => {
                set(&mut cfg.variant, variant);
                set(&mut cfg.bc_n, bc_n);
                set(&mut cfg.bc_epsilon, bc_epsilon);
                set(&mut cfg.bc_steps, bc_steps);
                set(&mut cfg.bc_lr, bc_lr);
            }
            Command::RtsTrain {
                mode,
                variant,
                variants,
                episodes_per_env,
                batch_size,
                learning_rate,
                executor_lr_scale,
                objective,
                instructor,
                executor,
                bc_n,
                bc_epsilon,
                bc_steps,
            } => {
                set(&mut cfg.mode, mode);
                set(&mut cfg.variant, variant);
                set(&mut cfg.variants, variants);
                set(&mut cfg.episodes_per_env, episodes_per_env);
                set(&mut cfg.batch_size, batch_size);
                set(&mut cfg.learning_rate, learning_rate);
                set(&mut cfg.executor_lr_scale, executor_lr_scale);
                set(&mut cfg.objective, objective);
                set(&mut cfg.instructor_path, instructor);
                set(&mut cfg.executor_path, executor);
                set(&mut cfg.bc_n, bc_n);
                set(&mut cfg.bc_epsilon, bc_epsilon);
                set(&mut cfg.bc_steps, bc_steps);
            }
            Command::RtsEval {
                instructor,
                executor,
                variant,
                n_games,
            }
            | Command::Interop {
                instructor,
                executor,
                variant,
                n_games,
            } => {
                set(&mut cfg.instructor_path, instructor);
                set(&mut cfg.executor_path, executor);
                set(&mut cfg.variant, variant);
                set(&mut cfg.n_games, n_games);
            }
            Command::Drift {
                executor,
                n_samples,
            } => {
                set(&mut cfg.executor_path, executor);
                set(&mut cfg.n_samples, n_samples);
            }
            Command::Permtest {
                a,
                b,
                n_perm,
                alternative,
            } => {
                set(&mut cfg.a_path, a);
                set(&mut cfg.b_path, b);
                set(&mut cfg.n_perm, n_perm);
                set(&mut cfg.alternative, alternative);
            }
            Command::DriftComparison {
                n_seeds,
                episodes_per_env,
            } => {
                let mut dc = cfg.drift_comparison.clone().unwrap_or_default();
                if let Some(n) = n_seeds {
                    dc.n_seeds = *n;
                }
                if let Some(e) = episodes_per_env {
                    dc.train.episodes_per_env = *e;
                }
                cfg.drift_comparison = Some(dc);
            }
        }
    }
}

/// Seed from the environment, if set; it outranks flags and config files.
fn env_seed() -> Result<Option<u64>, RunError> {
    match std::env::var("DRIFTLAB_SEED") {
        Ok(text) => text.trim().parse::<u64>().map(Some).map_err(|e| {
            RunError::Config(format!("DRIFTLAB_SEED={text:?} is not a valid seed: {e}"))
        }),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    // presets run under their own directory naming
    if let Command::Preset { name, show } = &cli.command {
        let seed = env_seed()?.or(cli.seed);
        if *show {
            let mut config = driftlab_cli::presets::preset(name).map_err(RunError::Config)?;
            if let Some(seed) = seed {
                config.master_seed = seed;
            }
            println!("{}", config.to_json());
            return Ok(());
        }
        let out = cli.out.unwrap_or_else(|| PathBuf::from("driftlab-out"));
        let manifest = execute_preset(name, seed, cli.jobs, &out)?;
        println!(
            "preset {name}: {} files in {}",
            manifest.outputs.len(),
            out.join(name).display()
        );
        return Ok(());
    }

    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                RunError::Runtime(format!("cannot read {}: {e}", path.display()))
            })?;
            ExperimentConfig::from_json(&text).map_err(RunError::Config)?
        }
        None => {
            let experiment = cli.command.experiment().ok_or_else(|| {
                RunError::Config("`run` needs --config naming an experiment".into())
            })?;
            ExperimentConfig::new(experiment)
        }
    };

    if let Some(experiment) = cli.command.experiment() {
        if config.experiment != experiment && cli.config.is_some() {
            return Err(RunError::Config(format!(
                "config file is for {:?} but the {:?} subcommand was invoked",
                config.experiment, experiment
            )));
        }
        config.experiment = experiment;
    }
    cli.command.apply(&mut config);
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(seed) = env_seed()? {
        config.master_seed = seed;
    }
    if let Some(format) = cli.format {
        config.output_format = format;
    }

    let out_dir = resolve_out_dir(cli.out.clone(), &config);
    let manifest = execute(&config, cli.jobs, &out_dir)?;
    println!(
        "{:?}: {} files in {}",
        config.experiment,
        manifest.outputs.len(),
        out_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Runtime(msg)) => {
            eprintln!("driftlab: runtime error: {msg}");
            ExitCode::from(1)
        }
        Err(RunError::Config(msg)) => {
            eprintln!("driftlab: config error: {msg}");
            ExitCode::from(2)
        }
    }
}
