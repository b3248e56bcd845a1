//! Paired-seed comparison of single-task and multitask fine-tuning.
//!
//! For each seed, one executor and one deliberately weak instructor are
//! behavior-cloned; the same executor copy is then fine-tuned either
//! jointly with that instructor on a single variant, or as the shared
//! executor of per-variant instructor copies on several variants, with the
//! same episode budget per training environment. Drift is measured as the
//! off-diagonal mass of the executor's message–action matrix, and
//! interoperability as the win rate when the executor is paired with a
//! cleanly behavior-cloned instructor it never trained with. One-sided
//! permutation tests compare the two arms across seeds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{
    drift_matrix, off_diagonal_mass, permutation_test, Alternative, ComparisonResult,
};
use crate::rng::RngStream;
use crate::rts::{
    bc_generate, bc_generate_pooled, bc_train, interop_eval, load_attack_table,
    rl_finetune_multitask, rl_finetune_single, RtsTrainConfig, TabularAgent, VariantId, NUM_UNITS,
};

/// Size, noise and optimizer settings for one behavior-cloning run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcSpec {
    pub n: usize,
    pub epsilon: f64,
    pub steps: usize,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftComparisonConfig {
    pub master_seed: u64,
    pub n_seeds: usize,
    /// Variant the single-task arm trains on; also the evaluation variant.
    pub single_variant: VariantId,
    pub multi_variants: Vec<VariantId>,
    pub train: RtsTrainConfig,
    /// Clean, large dataset: the executor initialization (natural
    /// semantics, not saturated).
    pub executor_bc: BcSpec,
    /// Small, noisy dataset: the drift-susceptible instructor
    /// initialization.
    pub weak_instructor_bc: BcSpec,
    /// Clean dataset for the held-out instructor used in interoperability
    /// evaluation.
    pub clean_instructor_bc: BcSpec,
    pub drift_samples: usize,
    pub eval_games: usize,
    pub n_perm: usize,
}

impl Default for DriftComparisonConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            n_seeds: 20,
            single_variant: VariantId::Original,
            multi_variants: vec![VariantId::Original, VariantId::B, VariantId::C],
            train: RtsTrainConfig {
                episodes_per_env: 16_000,
                learning_rate: 0.3,
                // Instructors must adapt to the executor's semantics
                // faster than they can erode them; a sluggish executor is
                // the tabular stand-in for the heavily pretrained one.
                executor_lr_scale: 0.1,
                log_every: 1_000,
                ..RtsTrainConfig::default()
            },
            executor_bc: BcSpec {
                n: 600,
                epsilon: 0.1,
                steps: 40,
                lr: 0.5,
            },
            weak_instructor_bc: BcSpec {
                n: 150,
                epsilon: 0.25,
                steps: 120,
                lr: 0.5,
            },
            clean_instructor_bc: BcSpec {
                n: 2_000,
                epsilon: 0.0,
                steps: 500,
                lr: 0.5,
            },
            drift_samples: 20_000,
            eval_games: 1_000,
            n_perm: 10_000,
        }
    }
}

impl DriftComparisonConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_seeds == 0 {
            return Err(Error::Config("n_seeds must be positive".into()));
        }
        if self.multi_variants.len() < 2 {
            return Err(Error::Config("multitask arm needs at least 2 variants".into()));
        }
        if !self.multi_variants.contains(&self.single_variant) {
            return Err(Error::Config(
                "multitask variants must include the single-task variant".into(),
            ));
        }
        self.train.validate()
    }
}

/// Measurements from one paired seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSeedOutcome {
    pub seed: usize,
    pub single_mass: f64,
    pub multi_mass: f64,
    pub single_interop: f64,
    pub multi_interop: f64,
    pub single_diag: [f64; NUM_UNITS],
    pub multi_diag: [f64; NUM_UNITS],
    /// Episodes consumed per environment: (single arm, multitask arm);
    /// parity requires every entry equal.
    pub single_budget: Vec<(VariantId, usize)>,
    pub multi_budget: Vec<(VariantId, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftComparisonResult {
    pub outcomes: Vec<PairedSeedOutcome>,
    /// One-sided test: mean single-task drift mass exceeds multitask.
    pub mass_test: ComparisonResult,
    /// One-sided test: mean multitask interop win rate exceeds single-task.
    pub interop_test: ComparisonResult,
    pub budget_parity: bool,
    pub episodes_per_env: usize,
}

/// Run one paired seed. Stream layout per seed: children 0..9 cover bc
/// data, training and evaluation draws; results depend only on
/// `(config, master_seed, seed)`.
pub fn run_paired_seed(cfg: &DriftComparisonConfig, seed: usize) -> Result<PairedSeedOutcome> {
    let base = RngStream::new(cfg.master_seed, 0).child(seed as u64);
    let table = load_attack_table(cfg.single_variant);

    let bc = |spec: &BcSpec, stream: RngStream| -> Result<(TabularAgent, TabularAgent)> {
        let data = bc_generate(&table, spec.n, spec.epsilon, &mut stream.rng())?;
        bc_train(&data, spec.steps, spec.lr)
    };

    // Executor data is pooled over the variant set so every message row is
    // exercised and starts diagonal-dominant; instructors are cloned from
    // single-variant data.
    let executor = {
        let spec = &cfg.executor_bc;
        let per_variant = (spec.n / cfg.multi_variants.len()).max(1);
        let data = bc_generate_pooled(
            &cfg.multi_variants,
            per_variant,
            spec.epsilon,
            &mut base.child(0).rng(),
        )?;
        bc_train(&data, spec.steps, spec.lr)?.1
    };
    let (weak_instructor, _) = bc(&cfg.weak_instructor_bc, base.child(1))?;
    let (clean_instructor, _) = bc(&cfg.clean_instructor_bc, base.child(2))?;

    let (_, single_exec, single_log) = rl_finetune_single(
        weak_instructor.clone(),
        executor.clone(),
        cfg.single_variant,
        &cfg.train,
        base.child(3),
    )?;
    let (_, multi_exec, multi_log) = rl_finetune_multitask(
        executor.clone(),
        &cfg.multi_variants,
        &weak_instructor,
        &cfg.train,
        base.child(4),
    )?;

    let single_matrix = drift_matrix(&single_exec, None, cfg.drift_samples, &mut base.child(5).rng())?;
    let multi_matrix = drift_matrix(&multi_exec, None, cfg.drift_samples, &mut base.child(6).rng())?;

    let single_interop = interop_eval(
        &clean_instructor,
        &single_exec,
        cfg.single_variant,
        cfg.eval_games,
        base.child(7),
    )?;
    let multi_interop = interop_eval(
        &clean_instructor,
        &multi_exec,
        cfg.single_variant,
        cfg.eval_games,
        base.child(8),
    )?;

    Ok(PairedSeedOutcome {
        seed,
        single_mass: off_diagonal_mass(&single_matrix),
        multi_mass: off_diagonal_mass(&multi_matrix),
        single_interop,
        multi_interop,
        single_diag: single_exec.diag_conditionals(),
        multi_diag: multi_exec.diag_conditionals(),
        single_budget: single_log.episodes_per_variant,
        multi_budget: multi_log.episodes_per_variant,
    })
}

/// Aggregate paired-seed outcomes into the two one-sided permutation tests
/// and the budget-parity check.
pub fn summarize(
    cfg: &DriftComparisonConfig,
    outcomes: Vec<PairedSeedOutcome>,
) -> Result<DriftComparisonResult> {
    let single_masses: Vec<f64> = outcomes.iter().map(|o| o.single_mass).collect();
    let multi_masses: Vec<f64> = outcomes.iter().map(|o| o.multi_mass).collect();
    let single_interops: Vec<f64> = outcomes.iter().map(|o| o.single_interop).collect();
    let multi_interops: Vec<f64> = outcomes.iter().map(|o| o.multi_interop).collect();

    let mut rng = RngStream::new(cfg.master_seed, 0).child(u64::MAX / 2).rng();
    let mass_test = permutation_test(
        &single_masses,
        &multi_masses,
        cfg.n_perm,
        Alternative::Greater,
        &mut rng,
    )?;
    let interop_test = permutation_test(
        &multi_interops,
        &single_interops,
        cfg.n_perm,
        Alternative::Greater,
        &mut rng,
    )?;

    let expected = cfg.train.episodes_per_env / cfg.train.batch_size * cfg.train.batch_size;
    let budget_parity = outcomes.iter().all(|o| {
        o.single_budget.iter().all(|(_, n)| *n == expected)
            && o.multi_budget.iter().all(|(_, n)| *n == expected)
            && o.multi_budget.len() == cfg.multi_variants.len()
    });

    Ok(DriftComparisonResult {
        outcomes,
        mass_test,
        interop_test,
        budget_parity,
        episodes_per_env: expected,
    })
}

/// Run the full comparison sequentially.
pub fn run_drift_comparison(cfg: &DriftComparisonConfig) -> Result<DriftComparisonResult> {
    cfg.validate()?;
    let outcomes: Result<Vec<PairedSeedOutcome>> =
        (0..cfg.n_seeds).map(|s| run_paired_seed(cfg, s)).collect();
    summarize(cfg, outcomes?)
}

/// Per-seed measurements as CSV.
pub fn outcomes_to_csv(outcomes: &[PairedSeedOutcome]) -> String {
    let mut out = String::from(
        "seed,single_mass,multi_mass,single_interop,multi_interop\n",
    );
    for o in outcomes {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            o.seed, o.single_mass, o.multi_mass, o.single_interop, o.multi_interop
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut cfg = DriftComparisonConfig::default();
        cfg.validate().unwrap();
        cfg.multi_variants = vec![VariantId::B];
        assert!(cfg.validate().is_err());
        cfg.multi_variants = vec![VariantId::B, VariantId::C];
        assert!(cfg.validate().is_err(), "must include the single variant");
    }

    #[test]
    fn paired_seed_is_reproducible_and_budget_balanced() {
        let cfg = DriftComparisonConfig {
            n_seeds: 1,
            train: RtsTrainConfig {
                episodes_per_env: 640,
                log_every: 100,
                ..RtsTrainConfig::default()
            },
            drift_samples: 2_000,
            eval_games: 200,
            ..DriftComparisonConfig::default()
        };
        let a = run_paired_seed(&cfg, 0).unwrap();
        let b = run_paired_seed(&cfg, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.single_budget, vec![(VariantId::Original, 640)]);
        for (_, n) in &a.multi_budget {
            assert_eq!(*n, 640);
        }
    }
}
