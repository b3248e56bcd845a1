//! Two-symbol signaling games with scalar instructor/executor policies.
//!
//! A game couples an observation prior, a reward table and two agents: an
//! instructor that maps observations to messages and an executor that maps
//! messages to actions. With the scalar parameterization used here, the
//! instructor sends the matching message with probability `sigma` and the
//! executor takes the matching action with probability `lambda`. The module
//! computes exact expected rewards and the analytic ascent fields for the
//! single-task objective and for the multitask objective in which two
//! task-specific instructors share one executor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A K-symbol signaling game: `K` observations, `K` messages, `K` actions.
///
/// `reward_table[o][a]` is the team reward when the executor takes action
/// `a` under observation `o`; the message never enters the reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalingGame {
    pub num_symbols: usize,
    pub obs_prior: Vec<f64>,
    pub reward_table: Vec<Vec<f64>>,
}

impl SignalingGame {
    pub fn new(obs_prior: Vec<f64>, reward_table: Vec<Vec<f64>>) -> Result<Self> {
        let k = obs_prior.len();
        if k == 0 {
            return Err(Error::InvalidGame("empty observation prior".into()));
        }
        if obs_prior.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidGame(
                "observation prior entries must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = obs_prior.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidGame(format!(
                "observation prior sums to {total}, expected 1 within 1e-12"
            )));
        }
        if reward_table.len() != k || reward_table.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidGame(format!(
                "reward table must be {k}x{k}"
            )));
        }
        if reward_table.iter().flatten().any(|r| !r.is_finite()) {
            return Err(Error::InvalidGame("reward table must be finite".into()));
        }
        Ok(Self {
            num_symbols: k,
            obs_prior,
            reward_table,
        })
    }

    /// Matching game: reward 1 when the action index equals the
    /// observation index, 0 otherwise. Uniform prior.
    pub fn preset_r(num_symbols: usize) -> Self {
        let prior = vec![1.0 / num_symbols as f64; num_symbols];
        let table = (0..num_symbols)
            .map(|o| (0..num_symbols).map(|a| if a == o { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(prior, table).expect("preset is valid")
    }

    /// Flipped matching game: reward 1 when the action index equals the
    /// flipped observation index `K - 1 - o`, 0 otherwise. Uniform prior.
    pub fn preset_r_prime(num_symbols: usize) -> Self {
        let prior = vec![1.0 / num_symbols as f64; num_symbols];
        let table = (0..num_symbols)
            .map(|o| {
                (0..num_symbols)
                    .map(|a| if a == num_symbols - 1 - o { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        Self::new(prior, table).expect("preset is valid")
    }

    /// Look up a two-symbol game preset by name (`"R"` or `"Rprime"`).
    pub fn from_preset_name(name: &str) -> Result<Self> {
        match name {
            "R" => Ok(Self::preset_r(2)),
            "Rprime" => Ok(Self::preset_r_prime(2)),
            other => Err(Error::UnknownVariant(format!(
                "unknown game preset {other:?}, expected \"R\" or \"Rprime\""
            ))),
        }
    }

    fn require_two_symbol(&self, what: &str) -> Result<()> {
        if self.num_symbols != 2 {
            return Err(Error::DimensionMismatch(format!(
                "{what} requires a 2-symbol game, got K={}",
                self.num_symbols
            )));
        }
        Ok(())
    }
}

/// The scalar instructor/executor pair: the instructor emits the matching
/// message with probability `sigma`, the executor takes the matching action
/// with probability `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarPolicyPair {
    pub sigma: f64,
    pub lambda: f64,
}

impl ScalarPolicyPair {
    pub fn new(sigma: f64, lambda: f64) -> Result<Self> {
        for (name, v) in [("sigma", sigma), ("lambda", lambda)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name}={v} must lie in [0,1]")));
            }
        }
        Ok(Self { sigma, lambda })
    }
}

/// Two task-specific instructors sharing a single executor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultitaskScalarParams {
    pub sigma1: f64,
    pub sigma2: f64,
    pub lambda: f64,
}

impl MultitaskScalarParams {
    pub fn new(sigma1: f64, sigma2: f64, lambda: f64) -> Result<Self> {
        for (name, v) in [("sigma1", sigma1), ("sigma2", sigma2), ("lambda", lambda)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name}={v} must lie in [0,1]")));
            }
        }
        Ok(Self {
            sigma1,
            sigma2,
            lambda,
        })
    }
}

/// Message distribution of the scalar instructor given observation `obs`.
pub fn message_probs(sigma: f64, obs: usize) -> [f64; 2] {
    if obs == 0 {
        [sigma, 1.0 - sigma]
    } else {
        [1.0 - sigma, sigma]
    }
}

/// Action distribution of the scalar executor given message `msg`.
pub fn action_probs(lambda: f64, msg: usize) -> [f64; 2] {
    if msg == 0 {
        [lambda, 1.0 - lambda]
    } else {
        [1.0 - lambda, lambda]
    }
}

/// Expected reward of the scalar pair on a two-symbol game: the full sum
/// over (observation, message, action) triples of
/// `p(o) * S(m|o) * L(a|m) * R(o, a)`.
pub fn expected_reward(policy: ScalarPolicyPair, game: &SignalingGame) -> Result<f64> {
    game.require_two_symbol("expected_reward with a scalar policy")?;
    let mut total = 0.0;
    for (o, &p_o) in game.obs_prior.iter().enumerate() {
        let msg = message_probs(policy.sigma, o);
        for (m, &p_m) in msg.iter().enumerate() {
            let act = action_probs(policy.lambda, m);
            for (a, &p_a) in act.iter().enumerate() {
                total += p_o * p_m * p_a * game.reward_table[o][a];
            }
        }
    }
    Ok(total)
}

/// Sum of the two task rewards, each task with its own instructor and the
/// shared executor.
pub fn multitask_expected_reward(
    params: MultitaskScalarParams,
    games: (&SignalingGame, &SignalingGame),
) -> Result<f64> {
    let first = expected_reward(
        ScalarPolicyPair {
            sigma: params.sigma1,
            lambda: params.lambda,
        },
        games.0,
    )?;
    let second = expected_reward(
        ScalarPolicyPair {
            sigma: params.sigma2,
            lambda: params.lambda,
        },
        games.1,
    )?;
    Ok(first + second)
}

/// The single-task ascent field `(dsigma, dlambda) = (lambda - 1/2, sigma - 1/2)`.
///
/// This is one half of the gradient of [`expected_reward`] on the matching
/// game; see [`GradientConvention`].
pub fn paper_flow_single(state: ScalarPolicyPair) -> (f64, f64) {
    (state.lambda - 0.5, state.sigma - 0.5)
}

/// The multitask ascent field
/// `(dsigma1, dsigma2, dlambda) = (lambda/2 - 1/4, -lambda/2 + 1/4, (sigma1 - sigma2)/2)`.
///
/// `dsigma1 = -dsigma2` at every state: the two instructors feel equal and
/// opposite pressure from the shared executor.
pub fn paper_flow_multitask(state: MultitaskScalarParams) -> (f64, f64, f64) {
    (
        0.5 * state.lambda - 0.25,
        -0.5 * state.lambda + 0.25,
        0.5 * (state.sigma1 - state.sigma2),
    )
}

/// True iff the executor has drifted: `lambda < 1/2` (strict).
pub fn drift_flag(lambda: f64) -> bool {
    lambda < 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowMode {
    SingleTask,
    Multitask,
}

/// Scaling convention for the ascent field.
///
/// `PaperField` is the field returned by [`paper_flow_single`] and
/// [`paper_flow_multitask`]. `FullGradient` is the exact gradient of the
/// expected-reward objectives, which is `2 x PaperField` componentwise; the
/// two generate the same trajectories up to the time rescaling `t -> 2t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GradientConvention {
    PaperField,
    FullGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowField {
    pub mode: FlowMode,
    pub convention: GradientConvention,
}

impl FlowField {
    pub fn new(mode: FlowMode, convention: GradientConvention) -> Self {
        Self { mode, convention }
    }

    fn scale(&self) -> f64 {
        match self.convention {
            GradientConvention::PaperField => 1.0,
            GradientConvention::FullGradient => 2.0,
        }
    }

    pub fn eval_single(&self, state: ScalarPolicyPair) -> (f64, f64) {
        debug_assert_eq!(self.mode, FlowMode::SingleTask);
        let (ds, dl) = paper_flow_single(state);
        (self.scale() * ds, self.scale() * dl)
    }

    pub fn eval_multitask(&self, state: MultitaskScalarParams) -> (f64, f64, f64) {
        debug_assert_eq!(self.mode, FlowMode::Multitask);
        let (d1, d2, dl) = paper_flow_multitask(state);
        (self.scale() * d1, self.scale() * d2, self.scale() * dl)
    }
}
