//! Tabular softmax agents over the five-symbol message/action space.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{best_response, AttackTable, UnitType, NUM_UNITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    /// Rows are observations (opponent units), columns are messages.
    Instructor,
    /// Rows are messages, columns are actions (units to build).
    Executor,
}

/// A 5x5 logit table; each row defines a softmax policy. Message `i`
/// natively means "build unit `i`".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularAgent {
    pub role: Role,
    pub logits: [[f64; NUM_UNITS]; NUM_UNITS],
}

pub(super) fn softmax(row: &[f64; NUM_UNITS]) -> [f64; NUM_UNITS] {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; NUM_UNITS];
    let mut total = 0.0;
    for (o, &z) in out.iter_mut().zip(row) {
        *o = (z - max).exp();
        total += *o;
    }
    for o in &mut out {
        *o /= total;
    }
    out
}

impl TabularAgent {
    /// All-zero logits: every row uniform.
    pub fn uniform(role: Role) -> Self {
        Self {
            role,
            logits: [[0.0; NUM_UNITS]; NUM_UNITS],
        }
    }

    /// Executor with natural semantics: message `i` builds unit `i`, with
    /// `scale` controlling how deterministic the mapping is.
    pub fn natural_executor(scale: f64) -> Self {
        let mut logits = [[0.0; NUM_UNITS]; NUM_UNITS];
        for (i, row) in logits.iter_mut().enumerate() {
            row[i] = scale;
        }
        Self {
            role: Role::Executor,
            logits,
        }
    }

    /// Instructor that names the best response to each observed opponent.
    pub fn best_response_instructor(table: &AttackTable, scale: f64) -> Self {
        let mut logits = [[0.0; NUM_UNITS]; NUM_UNITS];
        for (obs, row) in logits.iter_mut().enumerate() {
            let target = best_response(UnitType::ALL[obs], table);
            row[target.index()] = scale;
        }
        Self {
            role: Role::Instructor,
            logits,
        }
    }

    /// Executor mapping message `i` to unit `(i + shift) % 5`.
    pub fn shifted_executor(shift: usize, scale: f64) -> Self {
        let mut logits = [[0.0; NUM_UNITS]; NUM_UNITS];
        for (i, row) in logits.iter_mut().enumerate() {
            row[(i + shift) % NUM_UNITS] = scale;
        }
        Self {
            role: Role::Executor,
            logits,
        }
    }

    pub fn probs(&self, row: usize) -> [f64; NUM_UNITS] {
        softmax(&self.logits[row])
    }

    pub fn sample_row(&self, row: usize, rng: &mut impl Rng) -> usize {
        let probs = self.probs(row);
        let draw: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if draw < acc {
                return i;
            }
        }
        NUM_UNITS - 1
    }

    /// Diagonal conditionals `P(column i | row i)`; for an executor these
    /// are the probabilities of building exactly the named unit.
    pub fn diag_conditionals(&self) -> [f64; NUM_UNITS] {
        let mut out = [0.0; NUM_UNITS];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.probs(i)[i];
        }
        out
    }

    pub fn argmax_map(&self) -> [usize; NUM_UNITS] {
        let mut out = [0; NUM_UNITS];
        for (i, o) in out.iter_mut().enumerate() {
            let probs = self.probs(i);
            *o = probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(j, _)| j)
                .unwrap();
        }
        out
    }
}
