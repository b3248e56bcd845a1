//! Drift diagnostics and statistical comparison.
//!
//! The central object is the message–action confusion matrix of an
//! executor: row `m` is the empirical distribution of built units given
//! message `m`. Off-diagonal mass (row sums minus the trace) is the scalar
//! drift measure; `executor_drift_flag` applies the drift criterion (any
//! diagonal conditional below one half) to the exact policy. Comparisons
//! between training regimes use a two-sample permutation test on the
//! difference of means.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rts::{TabularAgent, UnitType, NUM_UNITS};

/// Empirical message-to-action conditional probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftMatrix {
    /// `probs[m][a]` is the empirical `P(action a | message m)`; rows with
    /// zero samples are all-zero.
    pub probs: Vec<Vec<f64>>,
    pub sample_counts: Vec<u64>,
    /// Set when fewer samples than messages were requested.
    pub insufficient_samples: bool,
}

impl DriftMatrix {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("message");
        for u in UnitType::ALL {
            out.push(',');
            out.push_str(u.name());
        }
        out.push_str(",samples\n");
        for (m, row) in self.probs.iter().enumerate() {
            out.push_str(UnitType::ALL[m].name());
            for p in row {
                out.push_str(&format!(",{p}"));
            }
            out.push_str(&format!(",{}\n", self.sample_counts[m]));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "probs": self.probs,
            "counts": self.sample_counts,
            "off_diagonal_mass": off_diagonal_mass(self),
            "insufficient_samples": self.insufficient_samples,
        })
    }
}

/// Estimate the executor's message-to-action matrix by sampling messages
/// from `message_dist` (uniform if `None`) and actions from the executor.
pub fn drift_matrix(
    executor: &TabularAgent,
    message_dist: Option<&[f64; NUM_UNITS]>,
    n_samples: usize,
    rng: &mut impl Rng,
) -> Result<DriftMatrix> {
    let uniform = [1.0 / NUM_UNITS as f64; NUM_UNITS];
    let dist = message_dist.unwrap_or(&uniform);
    if dist.iter().any(|p| !p.is_finite() || *p < 0.0)
        || (dist.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::InvalidGame(
            "message distribution must be a probability vector".into(),
        ));
    }
    let mut counts = [[0u64; NUM_UNITS]; NUM_UNITS];
    for _ in 0..n_samples {
        let draw: f64 = rng.gen();
        let mut acc = 0.0;
        let mut msg = NUM_UNITS - 1;
        for (i, p) in dist.iter().enumerate() {
            acc += p;
            if draw < acc {
                msg = i;
                break;
            }
        }
        let act = executor.sample_row(msg, rng);
        counts[msg][act] += 1;
    }
    let sample_counts: Vec<u64> = counts.iter().map(|row| row.iter().sum()).collect();
    let probs = counts
        .iter()
        .zip(&sample_counts)
        .map(|(row, &total)| {
            if total == 0 {
                vec![0.0; NUM_UNITS]
            } else {
                row.iter().map(|&c| c as f64 / total as f64).collect()
            }
        })
        .collect();
    Ok(DriftMatrix {
        probs,
        sample_counts,
        insufficient_samples: n_samples < NUM_UNITS,
    })
}

/// Sum of the off-diagonal entries: row sums minus the trace, at most
/// `K - trace` and exactly 0 for a diagonal matrix.
pub fn off_diagonal_mass(matrix: &DriftMatrix) -> f64 {
    matrix
        .probs
        .iter()
        .enumerate()
        .map(|(m, row)| {
            row.iter()
                .enumerate()
                .filter(|(a, _)| *a != m)
                .map(|(_, p)| p)
                .sum::<f64>()
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftDiagnostics {
    pub drifted: bool,
    /// Exact `P(action i | message i)` for each message.
    pub diagonal_conditionals: [f64; NUM_UNITS],
}

/// Apply the drift criterion to the exact executor policy: drifted iff any
/// diagonal conditional falls below one half.
pub fn executor_drift_flag(executor: &TabularAgent) -> DriftDiagnostics {
    let diagonal_conditionals = executor.diag_conditionals();
    DriftDiagnostics {
        drifted: diagonal_conditionals.iter().any(|&d| d < 0.5),
        diagonal_conditionals,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alternative {
    /// H1: mean of the first sample exceeds the mean of the second.
    Greater,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    /// Observed difference of means (first minus second).
    pub statistic: f64,
    pub p_value: f64,
    pub n_permutations: usize,
}

impl ComparisonResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "statistic": self.statistic,
            "p_value": self.p_value,
            "n_permutations": self.n_permutations,
        })
    }
}

/// Two-sample permutation test on the difference of means, with add-one
/// smoothing so the p-value lies in `[1/(n_perm+1), 1]`.
pub fn permutation_test(
    samples_a: &[f64],
    samples_b: &[f64],
    n_perm: usize,
    alternative: Alternative,
    rng: &mut impl Rng,
) -> Result<ComparisonResult> {
    if samples_a.is_empty() || samples_b.is_empty() {
        return Err(Error::Config("permutation test needs nonempty samples".into()));
    }
    if n_perm < 1000 {
        return Err(Error::Config(format!(
            "permutation test needs n_perm >= 1000, got {n_perm}"
        )));
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let observed = mean(samples_a) - mean(samples_b);
    let mut pooled: Vec<f64> = samples_a.iter().chain(samples_b).copied().collect();
    let n_a = samples_a.len();

    let exceeds = |stat: f64| match alternative {
        Alternative::Greater => stat >= observed,
        Alternative::TwoSided => stat.abs() >= observed.abs(),
    };
    let mut count = 0usize;
    for _ in 0..n_perm {
        pooled.shuffle(rng);
        let stat = mean(&pooled[..n_a]) - mean(&pooled[n_a..]);
        count += exceeds(stat) as usize;
    }
    Ok(ComparisonResult {
        statistic: observed,
        p_value: (count + 1) as f64 / (n_perm + 1) as f64,
        n_permutations: n_perm,
    })
}
