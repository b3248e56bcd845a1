//! Gradient-flow dynamics of the scalar signaling games.
//!
//! The single-task field `(lambda - 1/2, sigma - 1/2)` and the multitask
//! field `(lambda/2 - 1/4, -lambda/2 + 1/4, (sigma1 - sigma2)/2)` are solved
//! three ways: exactly (closed form), numerically (fixed-step RK4 with
//! boundary clipping) and discretely (explicit-Euler gradient ascent). The
//! closed forms are unclipped and may leave the unit box; the integrators
//! pin a component the moment it reaches 0 or 1, after which its derivative
//! is zero and the remaining components follow the reduced field.
//!
//! Classification: an initialization is `Drifted` when the executor
//! parameter converges to 0, `Aligned` when it converges to 1, `Pooling`
//! when the flow settles at the uninformative interior stationary point.
//! Single-task, drift happens exactly when `sigma0 + lambda0 < 1`;
//! multitask (with instructors sharing an initialization) exactly when
//! `lambda0 < 1/2`, independent of the instructor initialization.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signaling::{
    paper_flow_multitask, paper_flow_single, FlowMode, MultitaskScalarParams, ScalarPolicyPair,
};

/// Width of the band around an analytic decision boundary inside which
/// numerical classification is not required to agree with the analytic one.
pub const BOUNDARY_BAND: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriftClass {
    /// Executor parameter converges to 1.
    Aligned,
    /// Executor parameter converges to 0.
    Drifted,
    /// Convergence to the uninformative interior stationary point.
    Pooling,
}

impl std::fmt::Display for DriftClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DriftClass::Aligned => "aligned",
            DriftClass::Drifted => "drifted",
            DriftClass::Pooling => "pooling",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// RK4 step size.
    pub step: f64,
    /// Integration stops at this time even without convergence.
    pub horizon: f64,
    /// A component within this distance of 0 or 1 is snapped to the
    /// boundary and pinned.
    pub boundary_eps: f64,
    /// Integration stops early once every (clipped) derivative is smaller
    /// than this in magnitude.
    pub convergence_eps: f64,
    /// Record every n-th step in the trajectory (the initial and final
    /// states are always recorded).
    pub sample_every: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            horizon: 50.0,
            boundary_eps: 1e-9,
            convergence_eps: 1e-6,
            sample_every: 1,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.horizon > 0.0 && self.step < self.horizon) {
            return Err(Error::Config(format!(
                "need 0 < step < horizon, got step={} horizon={}",
                self.step, self.horizon
            )));
        }
        if self.boundary_eps <= 0.0 || self.convergence_eps <= 0.0 {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.sample_every == 0 {
            return Err(Error::Config("sample_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Same integrator, but the trajectory keeps endpoints only.
    pub fn terminal_only(mut self) -> Self {
        self.sample_every = usize::MAX;
        self
    }
}

/// Integration constants of the closed-form solutions.
///
/// Single-task: `c1 = sigma0/2 - 1/4`, `c2 = lambda0/2 - 1/4`. Multitask
/// (shared instructor initialization): `c1 = sigma0`, `c2 = lambda0 - 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConstants {
    pub c1: f64,
    pub c2: f64,
}

pub fn solve_constants_single(sigma0: f64, lambda0: f64) -> FlowConstants {
    FlowConstants {
        c1: 0.5 * sigma0 - 0.25,
        c2: 0.5 * lambda0 - 0.25,
    }
}

pub fn solve_constants_multitask(
    sigma1_0: f64,
    sigma2_0: f64,
    lambda0: f64,
) -> Result<FlowConstants> {
    if sigma1_0 != sigma2_0 {
        return Err(Error::UnsupportedInitialization(format!(
            "multitask closed form requires sigma1(0) = sigma2(0), got {sigma1_0} and {sigma2_0}"
        )));
    }
    Ok(FlowConstants {
        c1: sigma1_0,
        c2: lambda0 - 0.5,
    })
}

/// Unclipped single-task solution at time `t`:
/// `sigma(t) = (c1+c2) e^t + (c1-c2) e^-t + 1/2` and
/// `lambda(t) = (c1+c2) e^t + (c2-c1) e^-t + 1/2`.
pub fn closed_form_single(sigma0: f64, lambda0: f64, t: f64) -> (f64, f64) {
    let FlowConstants { c1, c2 } = solve_constants_single(sigma0, lambda0);
    let grow = (c1 + c2) * t.exp();
    let decay = (c1 - c2) * (-t).exp();
    (grow + decay + 0.5, grow - decay + 0.5)
}

/// Unclipped multitask solution `(sigma1, sigma2, lambda)` at time `t` for a
/// shared instructor initialization `sigma0`.
///
/// `lambda(t) = (lambda0 - 1/2) cosh(t/sqrt2) + 1/2` carries no dependence
/// on `sigma0`; the instructors move symmetrically about `sigma0` with
/// amplitude `(sqrt2/2)(lambda0 - 1/2) sinh(t/sqrt2)`.
pub fn closed_form_multitask(sigma0: f64, lambda0: f64, t: f64) -> (f64, f64, f64) {
    let c2 = lambda0 - 0.5;
    let q = t / SQRT_2;
    let spread = (SQRT_2 / 2.0) * c2 * q.sinh();
    (sigma0 + spread, sigma0 - spread, c2 * q.cosh() + 0.5)
}

fn require_open_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::Domain(format!(
            "{name}={v} must lie in the open interval (0,1)"
        )));
    }
    Ok(())
}

/// Analytic drift classification of a single-task initialization.
pub fn classify_single(sigma0: f64, lambda0: f64) -> Result<DriftClass> {
    require_open_unit("sigma0", sigma0)?;
    require_open_unit("lambda0", lambda0)?;
    let sum = sigma0 + lambda0;
    Ok(if sum < 1.0 {
        DriftClass::Drifted
    } else if sum > 1.0 {
        DriftClass::Aligned
    } else {
        DriftClass::Pooling
    })
}

/// Analytic drift classification of a multitask initialization with shared
/// instructor parameter; depends on the executor initialization only.
pub fn classify_multitask(lambda0: f64) -> Result<DriftClass> {
    require_open_unit("lambda0", lambda0)?;
    Ok(if lambda0 > 0.5 {
        DriftClass::Aligned
    } else if lambda0 < 0.5 {
        DriftClass::Drifted
    } else {
        DriftClass::Pooling
    })
}

/// A time-stamped parameter path. Single-task states are `[sigma, lambda]`;
/// multitask states are `[sigma1, sigma2, lambda]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub terminal_class: DriftClass,
}

impl<const N: usize> Trajectory<N> {
    pub fn terminal_state(&self) -> [f64; N] {
        *self.states.last().expect("trajectory is never empty")
    }

    /// Index of the executor parameter within a state.
    pub const fn lambda_index() -> usize {
        N - 1
    }

    fn column_names() -> Vec<&'static str> {
        match N {
            2 => vec!["t", "sigma", "lambda"],
            3 => vec!["t", "sigma", "lambda", "sigma2"],
            _ => unreachable!("trajectories are 2- or 3-dimensional"),
        }
    }

    fn row_values(&self, i: usize) -> Vec<f64> {
        let s = self.states[i];
        match N {
            2 => vec![self.times[i], s[0], s[1]],
            // column order is t, sigma(=sigma1), lambda, sigma2
            3 => vec![self.times[i], s[0], s[2], s[1]],
            _ => unreachable!(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::column_names().join(",");
        out.push('\n');
        for i in 0..self.times.len() {
            let row: Vec<String> = self.row_values(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let cols = Self::column_names();
        let rows: Vec<serde_json::Value> = (0..self.times.len())
            .map(|i| {
                let vals = self.row_values(i);
                let obj: serde_json::Map<String, serde_json::Value> = cols
                    .iter()
                    .zip(vals)
                    .map(|(c, v)| (c.to_string(), serde_json::json!(v)))
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::json!({
            "rows": rows,
            "terminal_class": self.terminal_class.to_string(),
        })
    }
}

fn classify_terminal<const N: usize>(state: [f64; N], tol: f64) -> DriftClass {
    let lambda = state[N - 1];
    let pooling = match N {
        2 => (state[0] - 0.5).abs() <= tol && (lambda - 0.5).abs() <= tol,
        3 => (lambda - 0.5).abs() <= tol && (state[0] - state[1]).abs() <= tol,
        _ => unreachable!(),
    };
    if pooling {
        DriftClass::Pooling
    } else if lambda > 0.5 {
        DriftClass::Aligned
    } else {
        DriftClass::Drifted
    }
}

/// Terminal-class tolerance: convergence can stop the integrator with
/// derivatives just under `convergence_eps`, so allow a small multiple.
fn pooling_tol(cfg: &IntegratorConfig) -> f64 {
    10.0 * cfg.convergence_eps
}

struct ClippedSystem<const N: usize, F: Fn(&[f64; N]) -> [f64; N]> {
    field: F,
    pinned: [bool; N],
}

impl<const N: usize, F: Fn(&[f64; N]) -> [f64; N]> ClippedSystem<N, F> {
    fn new(field: F, init: &mut [f64; N], boundary_eps: f64) -> Self {
        let mut pinned = [false; N];
        for (i, v) in init.iter_mut().enumerate() {
            if *v <= boundary_eps {
                *v = 0.0;
                pinned[i] = true;
            } else if *v >= 1.0 - boundary_eps {
                *v = 1.0;
                pinned[i] = true;
            }
        }
        Self { field, pinned }
    }

    /// Field with pinned components zeroed: the clipped dynamics.
    fn eval(&self, y: &[f64; N]) -> [f64; N] {
        let mut d = (self.field)(y);
        for i in 0..N {
            if self.pinned[i] {
                d[i] = 0.0;
            }
        }
        d
    }

    fn rk4_step(&self, y: &[f64; N], dt: f64) -> [f64; N] {
        let k1 = self.eval(y);
        let k2 = self.eval(&add_scaled(y, &k1, dt / 2.0));
        let k3 = self.eval(&add_scaled(y, &k2, dt / 2.0));
        let k4 = self.eval(&add_scaled(y, &k3, dt));
        let mut out = *y;
        for i in 0..N {
            out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }

    /// Clip to the unit box and pin components that reached a boundary.
    fn clip_and_pin(&mut self, y: &mut [f64; N], boundary_eps: f64) {
        for i in 0..N {
            if self.pinned[i] {
                continue;
            }
            if y[i] <= boundary_eps {
                y[i] = 0.0;
                self.pinned[i] = true;
            } else if y[i] >= 1.0 - boundary_eps {
                y[i] = 1.0;
                self.pinned[i] = true;
            }
        }
    }
}

fn add_scaled<const N: usize>(y: &[f64; N], d: &[f64; N], s: f64) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += s * d[i];
    }
    out
}

fn integrate<const N: usize>(
    field: impl Fn(&[f64; N]) -> [f64; N],
    mut init: [f64; N],
    cfg: &IntegratorConfig,
) -> Trajectory<N> {
    let mut system = ClippedSystem::new(field, &mut init, cfg.boundary_eps);
    let n_steps = (cfg.horizon / cfg.step).round() as usize;

    let mut y = init;
    let mut times = vec![0.0];
    let mut states = vec![y];
    let mut steps_done = 0usize;
    let mut recorded_at = 0usize;

    for k in 1..=n_steps {
        let derivs = system.eval(&y);
        if derivs.iter().all(|d| d.abs() < cfg.convergence_eps) {
            break;
        }
        y = system.rk4_step(&y, cfg.step);
        system.clip_and_pin(&mut y, cfg.boundary_eps);
        debug_assert!(y.iter().all(|v| v.is_finite()));
        steps_done = k;
        if k % cfg.sample_every == 0 {
            times.push(k as f64 * cfg.step);
            states.push(y);
            recorded_at = k;
        }
    }

    // The loop may exit between samples; attach the final state at its
    // true time.
    if steps_done > recorded_at {
        times.push(steps_done as f64 * cfg.step);
        states.push(y);
    }

    let terminal = classify_terminal(y, pooling_tol(cfg));
    Trajectory {
        times,
        states,
        terminal_class: terminal,
    }
}

/// Clipped RK4 integration of the single-task field.
pub fn integrate_clipped_single(
    init: ScalarPolicyPair,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<2>> {
    cfg.validate()?;
    let field = |y: &[f64; 2]| {
        let (ds, dl) = paper_flow_single(ScalarPolicyPair {
            sigma: y[0],
            lambda: y[1],
        });
        [ds, dl]
    };
    Ok(integrate(field, [init.sigma, init.lambda], cfg))
}

/// Clipped RK4 integration of the multitask field.
pub fn integrate_clipped_multitask(
    init: MultitaskScalarParams,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<3>> {
    cfg.validate()?;
    let field = |y: &[f64; 3]| {
        let (d1, d2, dl) = paper_flow_multitask(MultitaskScalarParams {
            sigma1: y[0],
            sigma2: y[1],
            lambda: y[2],
        });
        [d1, d2, dl]
    };
    Ok(integrate(
        field,
        [init.sigma1, init.sigma2, init.lambda],
        cfg,
    ))
}

fn euler<const N: usize>(
    field: impl Fn(&[f64; N]) -> [f64; N],
    init: [f64; N],
    alpha: f64,
    n_steps: usize,
) -> Trajectory<N> {
    let mut y = init;
    let mut times = vec![0.0];
    let mut states = vec![y];
    for k in 1..=n_steps {
        let d = field(&y);
        for i in 0..N {
            y[i] = (y[i] + alpha * d[i]).clamp(0.0, 1.0);
        }
        times.push(k as f64 * alpha);
        states.push(y);
    }
    let terminal = classify_terminal(y, 10.0 * 1e-6);
    Trajectory {
        times,
        states,
        terminal_class: terminal,
    }
}

/// Explicit-Euler gradient ascent on the single-task field with per-step
/// clipping to the unit box.
pub fn discrete_gradient_ascent_single(
    init: ScalarPolicyPair,
    alpha: f64,
    n_steps: usize,
) -> Result<Trajectory<2>> {
    if alpha <= 0.0 {
        return Err(Error::Config(format!("alpha={alpha} must be positive")));
    }
    let field = |y: &[f64; 2]| {
        let (ds, dl) = paper_flow_single(ScalarPolicyPair {
            sigma: y[0],
            lambda: y[1],
        });
        [ds, dl]
    };
    Ok(euler(field, [init.sigma, init.lambda], alpha, n_steps))
}

/// Explicit-Euler gradient ascent on the multitask field.
pub fn discrete_gradient_ascent_multitask(
    init: MultitaskScalarParams,
    alpha: f64,
    n_steps: usize,
) -> Result<Trajectory<3>> {
    if alpha <= 0.0 {
        return Err(Error::Config(format!("alpha={alpha} must be positive")));
    }
    let field = |y: &[f64; 3]| {
        let (d1, d2, dl) = paper_flow_multitask(MultitaskScalarParams {
            sigma1: y[0],
            sigma2: y[1],
            lambda: y[2],
        });
        [d1, d2, dl]
    };
    Ok(euler(field, [init.sigma1, init.sigma2, init.lambda], alpha, n_steps))
}

/// One cell of a phase-diagram sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub sigma0: f64,
    pub lambda0: f64,
    /// Analytic classification.
    pub class: DriftClass,
    /// Classification of the clipped-integration endpoint.
    pub numeric_class: DriftClass,
    /// Terminal state: `[sigma, lambda]` or `[sigma1, sigma2, lambda]`.
    pub terminal: Vec<f64>,
    /// Within [`BOUNDARY_BAND`] of the analytic decision boundary; exempt
    /// from agreement checks.
    pub boundary_band: bool,
    pub agree: bool,
}

/// Evaluate one sweep cell. Multitask cells start both instructors at
/// `sigma0`.
pub fn sweep_cell(mode: FlowMode, sigma0: f64, lambda0: f64, cfg: &IntegratorConfig) -> SweepCell {
    let cfg = cfg.terminal_only();
    match mode {
        FlowMode::SingleTask => {
            let class = classify_single(sigma0, lambda0).expect("interior grid");
            let traj = integrate_clipped_single(
                ScalarPolicyPair {
                    sigma: sigma0,
                    lambda: lambda0,
                },
                &cfg,
            )
            .expect("validated config");
            let boundary_band = (sigma0 + lambda0 - 1.0).abs() < BOUNDARY_BAND;
            SweepCell {
                sigma0,
                lambda0,
                class,
                numeric_class: traj.terminal_class,
                terminal: traj.terminal_state().to_vec(),
                boundary_band,
                agree: class == traj.terminal_class,
            }
        }
        FlowMode::Multitask => {
            let class = classify_multitask(lambda0).expect("interior grid");
            let traj = integrate_clipped_multitask(
                MultitaskScalarParams {
                    sigma1: sigma0,
                    sigma2: sigma0,
                    lambda: lambda0,
                },
                &cfg,
            )
            .expect("validated config");
            let boundary_band = (lambda0 - 0.5).abs() < BOUNDARY_BAND;
            SweepCell {
                sigma0,
                lambda0,
                class,
                numeric_class: traj.terminal_class,
                terminal: traj.terminal_state().to_vec(),
                boundary_band,
                agree: class == traj.terminal_class,
            }
        }
    }
}

/// Interior grid coordinate `i` of `n`: `(i+1)/(n+1)`, excluding the exact
/// boundary.
pub fn grid_coordinate(i: usize, n: usize) -> f64 {
    (i + 1) as f64 / (n + 1) as f64
}

/// Classify every cell of an `n x n` interior grid both analytically and
/// numerically. Cells are produced row-major: `sigma0` outer, `lambda0`
/// inner.
pub fn phase_sweep(n: usize, mode: FlowMode, cfg: &IntegratorConfig) -> Result<Vec<SweepCell>> {
    if n < 2 {
        return Err(Error::Config(format!("grid resolution {n} must be >= 2")));
    }
    cfg.validate()?;
    let mut cells = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            cells.push(sweep_cell(mode, grid_coordinate(i, n), grid_coordinate(j, n), cfg));
        }
    }
    Ok(cells)
}

/// CSV rendering of sweep results. Terminal columns follow the cell
/// dimension: single-task `sigma_final,lambda_final`, multitask
/// `sigma_final,lambda_final,sigma2_final`.
pub fn sweep_to_csv(cells: &[SweepCell]) -> String {
    let multitask = cells.first().map(|c| c.terminal.len() == 3).unwrap_or(false);
    let mut out = String::from("sigma0,lambda0,class,sigma_final,lambda_final");
    if multitask {
        out.push_str(",sigma2_final");
    }
    out.push_str(",numeric_class,boundary_band,agree\n");
    for c in cells {
        let (sf, lf, s2) = match c.terminal.len() {
            2 => (c.terminal[0], c.terminal[1], None),
            3 => (c.terminal[0], c.terminal[2], Some(c.terminal[1])),
            _ => unreachable!(),
        };
        out.push_str(&format!("{},{},{},{},{}", c.sigma0, c.lambda0, c.class, sf, lf));
        if let Some(s2) = s2 {
            out.push_str(&format!(",{s2}"));
        }
        out.push_str(&format!(",{},{},{}\n", c.numeric_class, c.boundary_band, c.agree));
    }
    out
}

pub fn sweep_to_json(cells: &[SweepCell]) -> serde_json::Value {
    serde_json::json!({ "cells": cells })
}
