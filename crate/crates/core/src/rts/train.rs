//! Policy-gradient fine-tuning of tabular instructor/executor pairs on the
//! sparse win/loss reward, single-task and multitask.

use serde::{Deserialize, Serialize};

use super::{
    load_attack_table, play_episode, sample_opponent, Episode, OpponentMode, Outcome,
    TabularAgent, VariantId, NUM_UNITS,
};
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    /// Score-function gradient with a moving-average reward baseline.
    Reinforce,
    /// Clipped-ratio surrogate over the fresh on-policy batch, optimized
    /// for several epochs.
    PpoClip { clip: f64, epochs: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtsTrainConfig {
    /// Episode budget per training environment.
    pub episodes_per_env: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Relative plasticity of the executor: its logits move at
    /// `learning_rate * executor_lr_scale`. Below 1, instructors adapt to
    /// the executor's semantics faster than they can erode them.
    pub executor_lr_scale: f64,
    /// Decay of the per-variant moving-average reward baseline.
    pub baseline_decay: f64,
    pub objective: Objective,
    pub opponent_mode: OpponentMode,
    /// Log one row every `log_every` episodes (budget accounting stays
    /// exact regardless).
    pub log_every: usize,
}

impl Default for RtsTrainConfig {
    fn default() -> Self {
        Self {
            episodes_per_env: 20_000,
            batch_size: 32,
            learning_rate: 0.2,
            executor_lr_scale: 1.0,
            baseline_decay: 0.9,
            objective: Objective::Reinforce,
            opponent_mode: OpponentMode::Cycling,
            log_every: 1,
        }
    }
}

impl RtsTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.log_every == 0 {
            return Err(Error::Config("batch_size and log_every must be positive".into()));
        }
        if self.learning_rate <= 0.0 || self.executor_lr_scale <= 0.0 {
            return Err(Error::Config(
                "learning_rate and executor_lr_scale must be positive".into(),
            ));
        }
        if !(0.0 < self.baseline_decay && self.baseline_decay < 1.0) {
            return Err(Error::Config("baseline_decay must lie in (0,1)".into()));
        }
        if let Objective::PpoClip { clip, epochs } = self.objective {
            if clip <= 0.0 || epochs == 0 {
                return Err(Error::Config("ppo clip and epochs must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub episode: usize,
    pub variant: VariantId,
    pub win: bool,
    pub reward: f64,
    /// Sum of the executor's diagonal conditionals at play time.
    pub diag_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    pub rows: Vec<TrainLogRow>,
    pub episodes_per_variant: Vec<(VariantId, usize)>,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("episode,variant,win,reward,diag_mass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.episode, r.variant, r.win, r.reward, r.diag_mass
            ));
        }
        out
    }

    pub fn episodes_for(&self, variant: VariantId) -> usize {
        self.episodes_per_variant
            .iter()
            .find(|(v, _)| *v == variant)
            .map(|(_, n)| *n)
            .unwrap_or(0)
    }
}

/// Lazily initialized moving average: the first batch is centered by its
/// own mean, so a constant-reward environment contributes exactly zero
/// advantage from the start.
struct MovingBaseline {
    decay: f64,
    value: Option<f64>,
}

impl MovingBaseline {
    fn new(decay: f64) -> Self {
        Self { decay, value: None }
    }

    fn advantage_base(&self, batch_mean: f64) -> f64 {
        self.value.unwrap_or(batch_mean)
    }

    fn update(&mut self, batch_mean: f64) {
        self.value = Some(match self.value {
            None => batch_mean,
            Some(v) => self.decay * v + (1.0 - self.decay) * batch_mean,
        });
    }
}

fn onehot_minus_probs(grad_row: &mut [f64; NUM_UNITS], probs: &[f64; NUM_UNITS], chosen: usize, weight: f64) {
    for (j, g) in grad_row.iter_mut().enumerate() {
        let indicator = if j == chosen { 1.0 } else { 0.0 };
        *g += weight * (indicator - probs[j]);
    }
}

struct CollectedBatch {
    episodes: Vec<Episode>,
    old_instr_prob: Vec<f64>,
    old_exec_prob: Vec<f64>,
    mean_reward: f64,
}

fn collect_batch(
    instructor: &TabularAgent,
    executor: &TabularAgent,
    variant: VariantId,
    cfg: &RtsTrainConfig,
    pool_seed: u64,
    episode_counter: &mut usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> CollectedBatch {
    let table = load_attack_table(variant);
    let mut episodes = Vec::with_capacity(cfg.batch_size);
    let mut old_instr_prob = Vec::with_capacity(cfg.batch_size);
    let mut old_exec_prob = Vec::with_capacity(cfg.batch_size);
    let mut total = 0.0;
    for _ in 0..cfg.batch_size {
        let opponent = sample_opponent(cfg.opponent_mode, pool_seed, *episode_counter as u64);
        *episode_counter += 1;
        let ep = play_episode(instructor, executor, &table, opponent, rng);
        old_instr_prob.push(instructor.probs(ep.opponent_unit.index())[ep.message]);
        old_exec_prob.push(executor.probs(ep.message)[ep.built_unit.index()]);
        total += ep.reward;
        episodes.push(ep);
    }
    CollectedBatch {
        episodes,
        old_instr_prob,
        old_exec_prob,
        mean_reward: total / cfg.batch_size as f64,
    }
}

/// One policy-gradient update of `(instructor, executor)` from a batch.
fn apply_update(
    instructor: &mut TabularAgent,
    executor: &mut TabularAgent,
    batch: &CollectedBatch,
    advantage_base: f64,
    cfg: &RtsTrainConfig,
) {
    let n = batch.episodes.len() as f64;
    match cfg.objective {
        Objective::Reinforce => {
            let mut instr_grad = [[0.0; NUM_UNITS]; NUM_UNITS];
            let mut exec_grad = [[0.0; NUM_UNITS]; NUM_UNITS];
            for ep in &batch.episodes {
                let adv = ep.reward - advantage_base;
                let obs = ep.opponent_unit.index();
                onehot_minus_probs(&mut instr_grad[obs], &instructor.probs(obs), ep.message, adv);
                onehot_minus_probs(
                    &mut exec_grad[ep.message],
                    &executor.probs(ep.message),
                    ep.built_unit.index(),
                    adv,
                );
            }
            for i in 0..NUM_UNITS {
                for j in 0..NUM_UNITS {
                    instructor.logits[i][j] += cfg.learning_rate * instr_grad[i][j] / n;
                    executor.logits[i][j] +=
                        cfg.learning_rate * cfg.executor_lr_scale * exec_grad[i][j] / n;
                }
            }
        }
        Objective::PpoClip { clip, epochs } => {
            for _ in 0..epochs {
                let mut instr_grad = [[0.0; NUM_UNITS]; NUM_UNITS];
                let mut exec_grad = [[0.0; NUM_UNITS]; NUM_UNITS];
                for (k, ep) in batch.episodes.iter().enumerate() {
                    let adv = ep.reward - advantage_base;
                    let obs = ep.opponent_unit.index();
                    let p_instr = instructor.probs(obs);
                    let p_exec = executor.probs(ep.message);
                    let ratio = (p_instr[ep.message] / batch.old_instr_prob[k])
                        * (p_exec[ep.built_unit.index()] / batch.old_exec_prob[k]);
                    let clipped_out = (adv > 0.0 && ratio > 1.0 + clip)
                        || (adv < 0.0 && ratio < 1.0 - clip);
                    if clipped_out {
                        continue;
                    }
                    let weight = adv * ratio;
                    onehot_minus_probs(&mut instr_grad[obs], &p_instr, ep.message, weight);
                    onehot_minus_probs(
                        &mut exec_grad[ep.message],
                        &p_exec,
                        ep.built_unit.index(),
                        weight,
                    );
                }
                for i in 0..NUM_UNITS {
                    for j in 0..NUM_UNITS {
                        instructor.logits[i][j] += cfg.learning_rate * instr_grad[i][j] / n;
                        executor.logits[i][j] +=
                        cfg.learning_rate * cfg.executor_lr_scale * exec_grad[i][j] / n;
                    }
                }
            }
        }
    }
}

fn log_batch(
    log: &mut TrainingLog,
    batch: &CollectedBatch,
    diag_mass: f64,
    first_episode: usize,
    log_every: usize,
) {
    for (k, ep) in batch.episodes.iter().enumerate() {
        let episode = first_episode + k;
        if episode % log_every == 0 {
            log.rows.push(TrainLogRow {
                episode,
                variant: ep.variant_id,
                win: ep.outcome == Outcome::Win,
                reward: ep.reward,
                diag_mass,
            });
        }
    }
}

/// Joint fine-tuning of one instructor/executor pair on a single variant.
pub fn rl_finetune_single(
    instructor: TabularAgent,
    executor: TabularAgent,
    variant: VariantId,
    cfg: &RtsTrainConfig,
    stream: RngStream,
) -> Result<(TabularAgent, TabularAgent, TrainingLog)> {
    cfg.validate()?;
    let mut instructor = instructor;
    let mut executor = executor;
    let mut log = TrainingLog::default();
    let mut rng = stream.rng();
    let mut baseline = MovingBaseline::new(cfg.baseline_decay);
    let mut episode_counter = 0usize;
    let pool_seed = stream.master_seed.wrapping_add(stream.stream_id);

    let n_batches = cfg.episodes_per_env / cfg.batch_size;
    for _ in 0..n_batches {
        let first_episode = episode_counter;
        let batch = collect_batch(
            &instructor,
            &executor,
            variant,
            cfg,
            pool_seed,
            &mut episode_counter,
            &mut rng,
        );
        let diag_mass: f64 = executor.diag_conditionals().iter().sum();
        log_batch(&mut log, &batch, diag_mass, first_episode, cfg.log_every);
        let base = baseline.advantage_base(batch.mean_reward);
        apply_update(&mut instructor, &mut executor, &batch, base, cfg);
        baseline.update(batch.mean_reward);
    }
    log.episodes_per_variant = vec![(variant, episode_counter)];
    Ok((instructor, executor, log))
}

/// Multitask fine-tuning: one executor shared across all variants, one
/// instructor per variant, all instructors starting from the same
/// initialization. Environments rotate round-robin; each batch updates the
/// active variant's instructor and the shared executor.
pub fn rl_finetune_multitask(
    executor: TabularAgent,
    variants: &[VariantId],
    instructor_init: &TabularAgent,
    cfg: &RtsTrainConfig,
    stream: RngStream,
) -> Result<(Vec<TabularAgent>, TabularAgent, TrainingLog)> {
    cfg.validate()?;
    if variants.len() < 2 {
        return Err(Error::Config(format!(
            "multitask training needs at least 2 variants, got {}; use single-task training",
            variants.len()
        )));
    }
    let mut executor = executor;
    let mut instructors: Vec<TabularAgent> = variants.iter().map(|_| instructor_init.clone()).collect();
    let mut baselines: Vec<MovingBaseline> = variants
        .iter()
        .map(|_| MovingBaseline::new(cfg.baseline_decay))
        .collect();
    let mut counters = vec![0usize; variants.len()];
    let mut log = TrainingLog::default();
    let mut rng = stream.rng();

    let batches_per_variant = cfg.episodes_per_env / cfg.batch_size;
    for round in 0..batches_per_variant {
        for (k, &variant) in variants.iter().enumerate() {
            let _ = round;
            let pool_seed = stream
                .master_seed
                .wrapping_add(stream.stream_id)
                .wrapping_add(k as u64);
            let first_episode = counters[k];
            let batch = collect_batch(
                &instructors[k],
                &executor,
                variant,
                cfg,
                pool_seed,
                &mut counters[k],
                &mut rng,
            );
            let diag_mass: f64 = executor.diag_conditionals().iter().sum();
            log_batch(&mut log, &batch, diag_mass, first_episode, cfg.log_every);
            let base = baselines[k].advantage_base(batch.mean_reward);
            apply_update(&mut instructors[k], &mut executor, &batch, base, cfg);
            baselines[k].update(batch.mean_reward);
        }
    }
    log.episodes_per_variant = variants
        .iter()
        .zip(&counters)
        .map(|(v, n)| (*v, *n))
        .collect();
    Ok((instructors, executor, log))
}

/// Win rate of the pair against the cycling opponent pool. Deterministic
/// given the stream.
pub fn evaluate_winrate(
    instructor: &TabularAgent,
    executor: &TabularAgent,
    variant: VariantId,
    n_games: usize,
    stream: RngStream,
) -> Result<f64> {
    if n_games == 0 {
        return Err(Error::Config("evaluation needs at least one game".into()));
    }
    let table = load_attack_table(variant);
    let mut rng = stream.rng();
    let mut wins = 0usize;
    for i in 0..n_games {
        let opponent = sample_opponent(OpponentMode::Cycling, 0, i as u64);
        let ep = play_episode(instructor, executor, &table, opponent, &mut rng);
        wins += (ep.outcome == Outcome::Win) as usize;
    }
    Ok(wins as f64 / n_games as f64)
}

/// Win rate of a cross-paired team: an executor evaluated with an
/// instructor it was not trained with (behavior-cloned, or fine-tuned on a
/// different variant).
pub fn interop_eval(
    foreign_instructor: &TabularAgent,
    executor: &TabularAgent,
    variant: VariantId,
    n_games: usize,
    stream: RngStream,
) -> Result<f64> {
    evaluate_winrate(foreign_instructor, executor, variant, n_games, stream)
}
