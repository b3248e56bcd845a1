//! Behavior-cloning data generation and maximum-likelihood initialization.

use rand::Rng;

use super::agent::softmax;
use super::{best_response, AttackTable, Role, TabularAgent, UnitType, NUM_UNITS};
use crate::error::{Error, Result};

/// Supervision triples `(obs, msg, act)` with per-channel corruption rate
/// `noise_rate`: the demonstrated action is the best response except with
/// probability epsilon, and the message names the demonstrated action
/// except with probability epsilon.
#[derive(Debug, Clone, PartialEq)]
pub struct BCDataset {
    pub triples: Vec<(UnitType, usize, UnitType)>,
    pub noise_rate: f64,
}

fn uniform_other(rng: &mut impl Rng, avoid: usize) -> usize {
    let draw = rng.gen_range(0..NUM_UNITS - 1);
    if draw >= avoid {
        draw + 1
    } else {
        draw
    }
}

/// Generate `n` triples against `table`: observations uniform, the action
/// is `best_response(obs)` with probability `1 - epsilon` (else a uniform
/// other unit), the message names the action with probability `1 - epsilon`
/// (else a uniform other message).
pub fn bc_generate(
    table: &AttackTable,
    n: usize,
    epsilon: f64,
    rng: &mut impl Rng,
) -> Result<BCDataset> {
    if !(0.0..0.5).contains(&epsilon) {
        return Err(Error::Config(format!(
            "bc noise rate {epsilon} must lie in [0, 0.5)"
        )));
    }
    let mut triples = Vec::with_capacity(n);
    for _ in 0..n {
        let obs = UnitType::ALL[rng.gen_range(0..NUM_UNITS)];
        let clean_act = best_response(obs, table);
        let act = if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
            UnitType::ALL[uniform_other(rng, clean_act.index())]
        } else {
            clean_act
        };
        let msg = if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
            uniform_other(rng, act.index())
        } else {
            act.index()
        };
        triples.push((obs, msg, act));
    }
    Ok(BCDataset {
        triples,
        noise_rate: epsilon,
    })
}

/// Concatenated clean/noisy data over several game variants. A single
/// variant's best responses need not use every unit, so pooling is how a
/// dataset comes to exercise all five messages.
pub fn bc_generate_pooled(
    variants: &[super::VariantId],
    n_per_variant: usize,
    epsilon: f64,
    rng: &mut impl Rng,
) -> Result<BCDataset> {
    let mut triples = Vec::with_capacity(variants.len() * n_per_variant);
    for &variant in variants {
        let table = super::load_attack_table(variant);
        triples.extend(bc_generate(&table, n_per_variant, epsilon, rng)?.triples);
    }
    Ok(BCDataset {
        triples,
        noise_rate: epsilon,
    })
}

fn fit_rows(counts: &[[f64; NUM_UNITS]; NUM_UNITS], steps: usize, lr: f64) -> [[f64; NUM_UNITS]; NUM_UNITS] {
    let mut logits = [[0.0; NUM_UNITS]; NUM_UNITS];
    for (row, count_row) in logits.iter_mut().zip(counts) {
        let total: f64 = count_row.iter().sum();
        if total == 0.0 {
            continue; // no data for this row: stays uniform
        }
        let target: Vec<f64> = count_row.iter().map(|c| c / total).collect();
        for _ in 0..steps {
            let p = softmax(row);
            for i in 0..NUM_UNITS {
                row[i] += lr * (target[i] - p[i]);
            }
        }
    }
    logits
}

/// Gradient ascent on the behavior-cloning log-likelihood: the instructor
/// row for each observation moves toward the empirical message conditional,
/// the executor row for each message toward the empirical action
/// conditional.
pub fn bc_train(dataset: &BCDataset, steps: usize, lr: f64) -> Result<(TabularAgent, TabularAgent)> {
    if dataset.triples.is_empty() {
        return Err(Error::Config("bc_train needs a nonempty dataset".into()));
    }
    let mut instr_counts = [[0.0; NUM_UNITS]; NUM_UNITS];
    let mut exec_counts = [[0.0; NUM_UNITS]; NUM_UNITS];
    for &(obs, msg, act) in &dataset.triples {
        instr_counts[obs.index()][msg] += 1.0;
        exec_counts[msg][act.index()] += 1.0;
    }
    let instructor = TabularAgent {
        role: Role::Instructor,
        logits: fit_rows(&instr_counts, steps, lr),
    };
    let executor = TabularAgent {
        role: Role::Executor,
        logits: fit_rows(&exec_counts, steps, lr),
    };
    Ok((instructor, executor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::rts::{load_attack_table, VariantId};

    #[test]
    fn clean_data_is_fully_consistent() {
        let t = load_attack_table(VariantId::Original);
        let mut rng = RngStream::new(8, 0).rng();
        let data = bc_generate(&t, 2_000, 0.0, &mut rng).unwrap();
        for &(obs, msg, act) in &data.triples {
            assert_eq!(act, best_response(obs, &t));
            assert_eq!(msg, act.index());
        }
    }

    #[test]
    fn noise_rate_bounds() {
        let t = load_attack_table(VariantId::Original);
        let mut rng = RngStream::new(8, 0).rng();
        assert!(bc_generate(&t, 10, 0.5, &mut rng).is_err());
        assert!(bc_generate(&t, 10, -0.1, &mut rng).is_err());
    }

    /// Channel-clean rates of the noisy generator: P(act = best response)
    /// and P(msg names the action) are both 1 - epsilon; P(msg names the
    /// best response) is (1-eps)^2 + eps^2/4 since a corrupted message can
    /// accidentally name the best response only after the action itself
    /// was corrupted.
    #[test]
    fn noisy_mixture_rates() {
        let t = load_attack_table(VariantId::Original);
        let mut rng = RngStream::new(8, 1).rng();
        let n = 100_000;
        let eps = 0.2;
        let data = bc_generate(&t, n, eps, &mut rng).unwrap();
        let mut act_clean = 0usize;
        let mut msg_act = 0usize;
        let mut msg_br = 0usize;
        for &(obs, msg, act) in &data.triples {
            let br = best_response(obs, &t);
            act_clean += (act == br) as usize;
            msg_act += (msg == act.index()) as usize;
            msg_br += (msg == br.index()) as usize;
        }
        let check = |observed: usize, expected: f64, what: &str| {
            let freq = observed as f64 / n as f64;
            let se = (expected * (1.0 - expected) / n as f64).sqrt();
            assert!((freq - expected).abs() < 3.0 * se, "{what}: {freq} vs {expected}");
        };
        check(act_clean, 1.0 - eps, "action channel");
        check(msg_act, 1.0 - eps, "message channel");
        check(msg_br, (1.0 - eps) * (1.0 - eps) + eps * eps / 4.0, "message vs best response");
    }

    #[test]
    fn clean_training_recovers_natural_semantics() {
        let t = load_attack_table(VariantId::Original);
        let mut rng = RngStream::new(9, 0).rng();
        let data = bc_generate(&t, 2_000, 0.0, &mut rng).unwrap();
        let (instructor, executor) = bc_train(&data, 500, 0.5).unwrap();
        // On the original rules the best-response image is {swordman,
        // spearman, cavalry, archer}; only those messages carry data.
        let covered: Vec<usize> = UnitType::ALL
            .iter()
            .map(|&o| best_response(o, &t).index())
            .collect();
        for (i, d) in executor.diag_conditionals().iter().enumerate() {
            if covered.contains(&i) {
                assert!(*d > 0.95, "executor diagonal {i}: {d}");
            } else {
                assert!((*d - 0.2).abs() < 1e-12, "uncovered row {i} stays uniform");
            }
        }
        // the instructor names the best response, e.g. archer for dragon
        let dragon_row = instructor.probs(UnitType::Dragon.index());
        assert!(dragon_row[UnitType::Archer.index()] > 0.95);
        for obs in UnitType::ALL {
            assert_eq!(
                instructor.argmax_map()[obs.index()],
                best_response(obs, &t).index()
            );
        }
    }

    /// Pooling clean data over game variants covers every message (the
    /// best-response images of the variants jointly hit all five units),
    /// after which the executor is diagonal everywhere.
    #[test]
    fn pooled_clean_training_covers_every_message() {
        let mut rng = RngStream::new(9, 1).rng();
        let mut triples = Vec::new();
        for variant in [VariantId::Original, VariantId::B, VariantId::C] {
            let t = load_attack_table(variant);
            triples.extend(bc_generate(&t, 800, 0.0, &mut rng).unwrap().triples);
        }
        let data = BCDataset {
            triples,
            noise_rate: 0.0,
        };
        let (_, executor) = bc_train(&data, 500, 0.5).unwrap();
        for (i, d) in executor.diag_conditionals().iter().enumerate() {
            assert!(*d > 0.95, "executor diagonal {i}: {d}");
        }
        assert_eq!(executor.argmax_map(), [0, 1, 2, 3, 4]);
    }

    #[test]
    fn uniform_message_action_data_keeps_executor_uniform() {
        // one triple for every (msg, act) combination: exactly uniform
        let mut triples = Vec::new();
        for msg in 0..NUM_UNITS {
            for act in UnitType::ALL {
                triples.push((UnitType::Swordman, msg, act));
            }
        }
        let data = BCDataset {
            triples,
            noise_rate: 0.0,
        };
        let (_, executor) = bc_train(&data, 400, 0.5).unwrap();
        for row in 0..NUM_UNITS {
            for p in executor.probs(row) {
                assert!((p - 0.2).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn rows_without_data_stay_uniform() {
        let data = BCDataset {
            triples: vec![(UnitType::Dragon, 3, UnitType::Archer)],
            noise_rate: 0.0,
        };
        let (instructor, executor) = bc_train(&data, 200, 0.5).unwrap();
        for p in instructor.probs(UnitType::Swordman.index()) {
            assert_eq!(p, 0.2);
        }
        for p in executor.probs(0) {
            assert_eq!(p, 0.2);
        }
    }
}
