//! Learning dynamics of instructor–executor policy pairs.
//!
//! The crate has three layers:
//!
//! - [`signaling`] and [`flow`]: the two-symbol signaling game with scalar
//!   instructor/executor parameters, its exact gradient flow (closed form,
//!   clipped numerical integration, discrete ascent) and drift
//!   classification, for both the single-task and the shared-executor
//!   multitask objective.
//! - [`stochastic`]: sampling-based policy-gradient training of the same
//!   games, with unbiased score-function estimators and seeded,
//!   reproducible runs.
//! - [`rts`], [`metrics`] and [`experiment`]: a desk-scale unit-countering
//!   strategy environment with nine rule variants, tabular softmax agents,
//!   behavior cloning, single-task and multitask RL fine-tuning, and the
//!   drift diagnostics (message–action confusion, off-diagonal mass,
//!   permutation tests) used to compare them.

pub mod error;
pub mod experiment;
pub mod flow;
pub mod metrics;
pub mod rng;
pub mod rts;
pub mod signaling;
pub mod stochastic;

pub use error::{Error, Result};
