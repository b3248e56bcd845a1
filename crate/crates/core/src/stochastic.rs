//! Sampling-based policy-gradient training of the scalar signaling games.
//!
//! Episodes are rolled out by sampling observation, message and action;
//! the score-function (REINFORCE) estimator built from them is unbiased
//! for the full gradient of the expected reward, i.e. for twice the
//! ascent field used by the flow analyses. Training therefore follows the
//! same trajectories as the flow up to a time rescaling plus sampling
//! noise, and terminal classes can be checked against the analytic
//! classification.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{DriftClass, Trajectory};
use crate::rng::RngStream;
use crate::signaling::{
    action_probs, message_probs, MultitaskScalarParams, ScalarPolicyPair, SignalingGame,
};

/// Policy parameters are clamped this far inside `[0,1]` so that
/// log-probability scores stay finite; a clamped parameter can still move
/// back toward the interior, mirroring how the clipped flow pins
/// boundaries without destroying them.
pub const PARAM_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Baseline {
    None,
    /// Exponential moving average of past batch rewards; the baseline for
    /// a batch never includes that batch, so the centered estimator stays
    /// unbiased.
    MovingAverage { decay: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskSchedule {
    /// Alternate tasks deterministically (default; reproducible budgets).
    RoundRobin,
    /// Draw the task uniformly each batch.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Total episode budget (across tasks, for multitask training).
    pub episodes: usize,
    pub batch_size: usize,
    pub baseline: Baseline,
    /// Multitask only; ignored by single-task training.
    pub task_schedule: TaskSchedule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            episodes: 20_000,
            batch_size: 32,
            baseline: Baseline::None,
            task_schedule: TaskSchedule::RoundRobin,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.episodes == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "episodes and batch_size must be positive".into(),
            ));
        }
        if let Baseline::MovingAverage { decay } = self.baseline {
            if !(0.0 < decay && decay < 1.0) {
                return Err(Error::Config(format!(
                    "baseline decay {decay} must lie in (0,1)"
                )));
            }
        }
        Ok(())
    }
}

/// One sampled play of the game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub obs: usize,
    pub msg: usize,
    pub action: usize,
    pub reward: f64,
}

fn draw_binary(rng: &mut impl Rng, p_first: f64) -> usize {
    if rng.gen::<f64>() < p_first {
        0
    } else {
        1
    }
}

/// Roll out one episode: observation from the prior, message from the
/// instructor, action from the executor, reward from the game table.
pub fn sample_episode(
    policy: ScalarPolicyPair,
    game: &SignalingGame,
    rng: &mut impl Rng,
) -> Result<EpisodeRecord> {
    if game.num_symbols != 2 {
        return Err(Error::DimensionMismatch(format!(
            "sample_episode with a scalar policy requires K=2, got {}",
            game.num_symbols
        )));
    }
    let obs = draw_binary(rng, game.obs_prior[0]);
    let msg = draw_binary(rng, message_probs(policy.sigma, obs)[0]);
    let action = draw_binary(rng, action_probs(policy.lambda, msg)[0]);
    Ok(EpisodeRecord {
        obs,
        msg,
        action,
        reward: game.reward_table[obs][action],
    })
}

fn clamp_param(v: f64) -> f64 {
    v.clamp(PARAM_CLAMP, 1.0 - PARAM_CLAMP)
}

fn centered_estimate(batch: &[EpisodeRecord], policy: ScalarPolicyPair, baseline: f64) -> (f64, f64) {
    let sigma = clamp_param(policy.sigma);
    let lambda = clamp_param(policy.lambda);
    let mut g_sigma = 0.0;
    let mut g_lambda = 0.0;
    for ep in batch {
        let advantage = ep.reward - baseline;
        let score_sigma = if ep.msg == ep.obs {
            1.0 / sigma
        } else {
            -1.0 / (1.0 - sigma)
        };
        let score_lambda = if ep.action == ep.msg {
            1.0 / lambda
        } else {
            -1.0 / (1.0 - lambda)
        };
        g_sigma += advantage * score_sigma;
        g_lambda += advantage * score_lambda;
    }
    let n = batch.len() as f64;
    (g_sigma / n, g_lambda / n)
}

/// Batch-mean score-function gradient estimate `(g_sigma, g_lambda)`:
/// reward times the log-probability score of the sampled message/action.
/// Unbiased for the full gradient of the expected reward.
pub fn reinforce_estimate(batch: &[EpisodeRecord], policy: ScalarPolicyPair) -> Result<(f64, f64)> {
    if batch.is_empty() {
        return Err(Error::Config("reinforce_estimate needs a nonempty batch".into()));
    }
    Ok(centered_estimate(batch, policy, 0.0))
}

/// Same estimator with rewards centered by a baseline value; the baseline
/// must not depend on the batch for the estimate to stay unbiased.
pub fn reinforce_estimate_with_baseline(
    batch: &[EpisodeRecord],
    policy: ScalarPolicyPair,
    baseline: f64,
) -> Result<(f64, f64)> {
    if batch.is_empty() {
        return Err(Error::Config("reinforce_estimate needs a nonempty batch".into()));
    }
    Ok(centered_estimate(batch, policy, baseline))
}

struct BaselineState {
    kind: Baseline,
    value: f64,
}

impl BaselineState {
    fn new(kind: Baseline) -> Self {
        Self { kind, value: 0.0 }
    }

    fn current(&self) -> f64 {
        match self.kind {
            Baseline::None => 0.0,
            Baseline::MovingAverage { .. } => self.value,
        }
    }

    fn update(&mut self, batch_mean: f64) {
        if let Baseline::MovingAverage { decay } = self.kind {
            self.value = decay * self.value + (1.0 - decay) * batch_mean;
        }
    }
}

fn stochastic_class(lambda: f64) -> DriftClass {
    if lambda > 0.5 {
        DriftClass::Aligned
    } else if lambda < 0.5 {
        DriftClass::Drifted
    } else {
        DriftClass::Pooling
    }
}

/// A completed stochastic training run: the parameter path (one sample per
/// batch, step index as time), the per-batch mean rewards, and the episode
/// budget actually consumed.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdRun<const N: usize> {
    pub trajectory: Trajectory<N>,
    pub batch_rewards: Vec<f64>,
    pub episodes_used: usize,
    /// Episodes consumed per task (single-task runs have one entry).
    pub episodes_per_task: Vec<usize>,
}

impl<const N: usize> SgdRun<N> {
    /// CSV rows (one per batch): seed, step, parameters after the update,
    /// batch mean reward.
    pub fn to_csv(&self, seed: u64) -> String {
        let mut out = String::from(match N {
            2 => "seed,step,sigma,lambda,mean_reward\n",
            3 => "seed,step,sigma,lambda,sigma2,mean_reward\n",
            _ => unreachable!(),
        });
        for (k, reward) in self.batch_rewards.iter().enumerate() {
            let s = self.trajectory.states[k + 1];
            match N {
                2 => out.push_str(&format!("{},{},{},{},{}\n", seed, k + 1, s[0], s[1], reward)),
                3 => out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    seed,
                    k + 1,
                    s[0],
                    s[2],
                    s[1],
                    reward
                )),
                _ => unreachable!(),
            }
        }
        out
    }

    pub fn summary_json(&self, seed: u64) -> serde_json::Value {
        let end = self.trajectory.terminal_state();
        let state = match N {
            2 => serde_json::json!({"sigma": end[0], "lambda": end[1]}),
            3 => serde_json::json!({"sigma1": end[0], "sigma2": end[1], "lambda": end[2]}),
            _ => unreachable!(),
        };
        serde_json::json!({
            "seed": seed,
            "terminal_state": state,
            "terminal_class": self.trajectory.terminal_class.to_string(),
            "episodes_used": self.episodes_used,
            "episodes_per_task": self.episodes_per_task,
        })
    }
}

/// Stochastic gradient ascent on a single game: per batch, the policy moves
/// by `learning_rate` times the (optionally baselined) REINFORCE estimate,
/// clamped to the interior.
pub fn sgd_train(
    init: ScalarPolicyPair,
    game: &SignalingGame,
    cfg: &TrainConfig,
    stream: RngStream,
) -> Result<SgdRun<2>> {
    cfg.validate()?;
    let mut rng = stream.rng();
    let mut sigma = clamp_param(init.sigma);
    let mut lambda = clamp_param(init.lambda);
    let n_batches = cfg.episodes / cfg.batch_size;

    let mut times = vec![0.0];
    let mut states = vec![[sigma, lambda]];
    let mut batch_rewards = Vec::with_capacity(n_batches);
    let mut baseline = BaselineState::new(cfg.baseline);
    let mut batch = Vec::with_capacity(cfg.batch_size);

    for k in 1..=n_batches {
        batch.clear();
        for _ in 0..cfg.batch_size {
            batch.push(sample_episode(ScalarPolicyPair { sigma, lambda }, game, &mut rng)?);
        }
        let mean_reward = batch.iter().map(|e| e.reward).sum::<f64>() / cfg.batch_size as f64;
        let (g_sigma, g_lambda) =
            centered_estimate(&batch, ScalarPolicyPair { sigma, lambda }, baseline.current());
        baseline.update(mean_reward);
        sigma = clamp_param(sigma + cfg.learning_rate * g_sigma);
        lambda = clamp_param(lambda + cfg.learning_rate * g_lambda);
        times.push(k as f64);
        states.push([sigma, lambda]);
        batch_rewards.push(mean_reward);
    }

    let episodes_used = n_batches * cfg.batch_size;
    Ok(SgdRun {
        trajectory: Trajectory {
            times,
            states,
            terminal_class: stochastic_class(lambda),
        },
        batch_rewards,
        episodes_used,
        episodes_per_task: vec![episodes_used],
    })
}

/// Multitask stochastic training: two task-specific instructors share one
/// executor. Batches alternate between the tasks (round-robin by default),
/// each batch updating its task's instructor and the shared executor.
pub fn multitask_sgd_train(
    init: MultitaskScalarParams,
    games: (&SignalingGame, &SignalingGame),
    cfg: &TrainConfig,
    stream: RngStream,
) -> Result<SgdRun<3>> {
    cfg.validate()?;
    if init.sigma1 != init.sigma2 {
        return Err(Error::UnsupportedInitialization(format!(
            "multitask training requires sigma1(0) = sigma2(0), got {} and {}",
            init.sigma1, init.sigma2
        )));
    }
    let mut rng: ChaCha8Rng = stream.rng();
    let mut sigmas = [clamp_param(init.sigma1), clamp_param(init.sigma2)];
    let mut lambda = clamp_param(init.lambda);
    let n_batches = cfg.episodes / cfg.batch_size;

    let mut times = vec![0.0];
    let mut states = vec![[sigmas[0], sigmas[1], lambda]];
    let mut batch_rewards = Vec::with_capacity(n_batches);
    let mut baselines = [BaselineState::new(cfg.baseline), BaselineState::new(cfg.baseline)];
    let mut episodes_per_task = vec![0usize; 2];
    let mut batch = Vec::with_capacity(cfg.batch_size);

    for k in 1..=n_batches {
        let task = match cfg.task_schedule {
            TaskSchedule::RoundRobin => (k - 1) % 2,
            TaskSchedule::Sampled => rng.gen_range(0..2),
        };
        let game = if task == 0 { games.0 } else { games.1 };
        let policy = ScalarPolicyPair {
            sigma: sigmas[task],
            lambda,
        };
        batch.clear();
        for _ in 0..cfg.batch_size {
            batch.push(sample_episode(policy, game, &mut rng)?);
        }
        episodes_per_task[task] += cfg.batch_size;
        let mean_reward = batch.iter().map(|e| e.reward).sum::<f64>() / cfg.batch_size as f64;
        let (g_sigma, g_lambda) = centered_estimate(&batch, policy, baselines[task].current());
        baselines[task].update(mean_reward);
        sigmas[task] = clamp_param(sigmas[task] + cfg.learning_rate * g_sigma);
        lambda = clamp_param(lambda + cfg.learning_rate * g_lambda);
        times.push(k as f64);
        states.push([sigmas[0], sigmas[1], lambda]);
        batch_rewards.push(mean_reward);
    }

    Ok(SgdRun {
        trajectory: Trajectory {
            times,
            states,
            terminal_class: stochastic_class(lambda),
        },
        batch_rewards,
        episodes_used: n_batches * cfg.batch_size,
        episodes_per_task,
    })
}
