//! Cross-checks between the closed-form solutions, an independent RK4
//! oracle, the clipped integrator and the analytic classification.

use rand::Rng;

use driftlab::flow::{
    classify_multitask, classify_single, closed_form_multitask, closed_form_single,
    discrete_gradient_ascent_multitask, discrete_gradient_ascent_single, grid_coordinate,
    integrate_clipped_multitask, integrate_clipped_single, solve_constants_multitask, DriftClass,
    IntegratorConfig, BOUNDARY_BAND,
};
use driftlab::rng::RngStream;
use driftlab::signaling::{MultitaskScalarParams, ScalarPolicyPair};

/// Test-local RK4 on an unclipped field; independent of the crate's
/// integrator.
fn rk4_oracle<const N: usize>(
    field: impl Fn(&[f64; N]) -> [f64; N],
    mut y: [f64; N],
    t_end: f64,
    dt: f64,
    mut on_sample: impl FnMut(f64, &[f64; N]),
) {
    let steps = (t_end / dt).round() as usize;
    let mut t = 0.0;
    on_sample(t, &y);
    for _ in 0..steps {
        let k1 = field(&y);
        let mut y2 = y;
        for i in 0..N {
            y2[i] = y[i] + 0.5 * dt * k1[i];
        }
        let k2 = field(&y2);
        for i in 0..N {
            y2[i] = y[i] + 0.5 * dt * k2[i];
        }
        let k3 = field(&y2);
        for i in 0..N {
            y2[i] = y[i] + dt * k3[i];
        }
        let k4 = field(&y2);
        for i in 0..N {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += dt;
        on_sample(t, &y);
    }
}

fn single_field(y: &[f64; 2]) -> [f64; 2] {
    [y[1] - 0.5, y[0] - 0.5]
}

fn multitask_field(y: &[f64; 3]) -> [f64; 3] {
    [0.5 * y[2] - 0.25, -0.5 * y[2] + 0.25, 0.5 * (y[0] - y[1])]
}

/// First time (scanning at 1e-3) at which any unclipped component leaves
/// (0, 1); capped at `cap`.
fn boundary_time<const N: usize>(value: impl Fn(f64) -> [f64; N], cap: f64) -> f64 {
    let mut t = 0.0;
    while t < cap {
        let v = value(t + 1e-3);
        if v.iter().any(|x| *x <= 0.0 || *x >= 1.0) {
            return t;
        }
        t += 1e-3;
    }
    cap
}

#[test]
fn closed_form_single_matches_rk4_before_boundary() {
    let mut rng = RngStream::new(101, 0).rng();
    for _ in 0..100 {
        let s0 = rng.gen_range(0.02..0.98);
        let l0 = rng.gen_range(0.02..0.98);
        let t_end = boundary_time(|t| {
            let (s, l) = closed_form_single(s0, l0, t);
            [s, l]
        }, 5.0);
        if t_end < 1e-3 {
            continue;
        }
        let mut max_err: f64 = 0.0;
        rk4_oracle(single_field, [s0, l0], t_end, 1e-4, |t, y| {
            let (s, l) = closed_form_single(s0, l0, t);
            max_err = max_err.max((s - y[0]).abs()).max((l - y[1]).abs());
        });
        assert!(max_err < 1e-6, "init ({s0}, {l0}): max err {max_err}");
    }
}

#[test]
fn closed_form_multitask_matches_rk4_before_boundary() {
    let mut rng = RngStream::new(101, 1).rng();
    for _ in 0..100 {
        let s0 = rng.gen_range(0.02..0.98);
        let l0 = rng.gen_range(0.02..0.98);
        let t_end = boundary_time(|t| {
            let (s1, s2, l) = closed_form_multitask(s0, l0, t);
            [s1, s2, l]
        }, 5.0);
        if t_end < 1e-3 {
            continue;
        }
        let mut max_err: f64 = 0.0;
        rk4_oracle(multitask_field, [s0, s0, l0], t_end, 1e-4, |t, y| {
            let (s1, s2, l) = closed_form_multitask(s0, l0, t);
            max_err = max_err
                .max((s1 - y[0]).abs())
                .max((s2 - y[1]).abs())
                .max((l - y[2]).abs());
        });
        assert!(max_err < 1e-6, "init ({s0}, {l0}): max err {max_err}");
    }
}

/// Central differences of the closed forms reproduce the fields.
#[test]
fn closed_form_time_derivative_matches_field() {
    let mut rng = RngStream::new(101, 2).rng();
    let h = 1e-6;
    for _ in 0..100 {
        let s0 = rng.gen_range(0.05..0.95);
        let l0 = rng.gen_range(0.05..0.95);
        let t = rng.gen_range(0.0..5.0);

        let (sp, lp) = closed_form_single(s0, l0, t + h);
        let (sm, lm) = closed_form_single(s0, l0, t - h);
        let (s, l) = closed_form_single(s0, l0, t);
        let field = single_field(&[s, l]);
        assert!(((sp - sm) / (2.0 * h) - field[0]).abs() < 1e-6);
        assert!(((lp - lm) / (2.0 * h) - field[1]).abs() < 1e-6);

        let plus = closed_form_multitask(s0, l0, t + h);
        let minus = closed_form_multitask(s0, l0, t - h);
        let at = closed_form_multitask(s0, l0, t);
        let field = multitask_field(&[at.0, at.1, at.2]);
        assert!(((plus.0 - minus.0) / (2.0 * h) - field[0]).abs() < 1e-6);
        assert!(((plus.1 - minus.1) / (2.0 * h) - field[1]).abs() < 1e-6);
        assert!(((plus.2 - minus.2) / (2.0 * h) - field[2]).abs() < 1e-6);
    }
}

/// The multitask constants `(c1, c2) = (sigma0, lambda0 - 1/2)` are
/// validated by substitution into the two-exponential solution form:
/// initial conditions hold, the implementation's evaluation agrees with
/// the verbatim form to 1e-10, and the solution satisfies the three ODEs
/// under numerical differentiation.
#[test]
fn multitask_constants_satisfy_solution_form() {
    let sqrt2 = std::f64::consts::SQRT_2;
    // verbatim two-exponential expressions
    let verbatim = |c1: f64, c2: f64, l0: f64, t: f64| -> (f64, f64, f64) {
        let s1 = 0.25
            * (-t / sqrt2).exp()
            * (4.0 * c1 * (t / sqrt2).exp() + sqrt2 * c2 * (sqrt2 * t).exp() - sqrt2 * c2);
        let s2 = -0.25
            * (-t / sqrt2).exp()
            * (-4.0 * c1 * (t / sqrt2).exp() + sqrt2 * c2 * (sqrt2 * t).exp() - sqrt2 * c2);
        let l = 0.5 * (l0 - 0.5) * (((sqrt2 - 1.0 / sqrt2) * t).exp() + (-t / sqrt2).exp()) + 0.5;
        (s1, s2, l)
    };

    let mut rng = RngStream::new(101, 3).rng();
    for _ in 0..100 {
        let s0 = rng.gen_range(0.0..1.0);
        let l0 = rng.gen_range(0.0..1.0);
        let c = solve_constants_multitask(s0, s0, l0).unwrap();
        assert_eq!(c.c1, s0);
        assert!((c.c2 - (l0 - 0.5)).abs() < 1e-15);

        // initial conditions
        let (s1, s2, l) = verbatim(c.c1, c.c2, l0, 0.0);
        assert!((s1 - s0).abs() < 1e-12 && (s2 - s0).abs() < 1e-12 && (l - l0).abs() < 1e-12);

        // implementation matches the verbatim form
        let t = rng.gen_range(0.0..6.0);
        let ours = closed_form_multitask(s0, l0, t);
        let theirs = verbatim(c.c1, c.c2, l0, t);
        assert!((ours.0 - theirs.0).abs() < 1e-10);
        assert!((ours.1 - theirs.1).abs() < 1e-10);
        assert!((ours.2 - theirs.2).abs() < 1e-10);
    }

    // the verbatim form satisfies the ODE system at 10 random times
    let mut rng = RngStream::new(101, 4).rng();
    let (s0, l0) = (0.35, 0.8);
    let c = solve_constants_multitask(s0, s0, l0).unwrap();
    let h = 1e-5;
    for _ in 0..10 {
        let t = rng.gen_range(0.1..4.0);
        let at = verbatim(c.c1, c.c2, l0, t);
        let plus = verbatim(c.c1, c.c2, l0, t + h);
        let minus = verbatim(c.c1, c.c2, l0, t - h);
        let num = [
            (plus.0 - minus.0) / (2.0 * h),
            (plus.1 - minus.1) / (2.0 * h),
            (plus.2 - minus.2) / (2.0 * h),
        ];
        let field = multitask_field(&[at.0, at.1, at.2]);
        for i in 0..3 {
            assert!((num[i] - field[i]).abs() < 1e-8, "component {i}");
        }
    }
}

/// While every component is interior, clipped multitask trajectories share
/// the same executor path regardless of the instructor initialization.
#[test]
fn multitask_lambda_independent_of_sigma0_before_pinning() {
    let cfg = IntegratorConfig::default();
    let sigma0s = [0.05, 0.3, 0.5, 0.95];
    let trajs: Vec<_> = sigma0s
        .iter()
        .map(|&s0| {
            integrate_clipped_multitask(
                MultitaskScalarParams {
                    sigma1: s0,
                    sigma2: s0,
                    lambda: 0.7,
                },
                &cfg,
            )
            .unwrap()
        })
        .collect();
    // shared window: all components of every trajectory strictly interior
    let interior_len = trajs
        .iter()
        .map(|t| {
            t.states
                .iter()
                .take_while(|s| s.iter().all(|&v| v > 0.0 && v < 1.0))
                .count()
        })
        .min()
        .unwrap();
    assert!(
        interior_len as f64 * cfg.step > 0.2,
        "comparison window too short: {interior_len} samples"
    );
    for k in 0..interior_len {
        let reference = trajs[0].states[k][2];
        for t in &trajs[1..] {
            assert!(
                (t.states[k][2] - reference).abs() < 1e-6,
                "lambda paths diverge at sample {k}"
            );
        }
    }
    for t in &trajs {
        assert_eq!(t.terminal_state()[2], 1.0);
        assert_eq!(t.terminal_class, DriftClass::Aligned);
    }
}

/// For a well-initialized executor the multitask executor parameter never
/// decreases along the clipped flow.
#[test]
fn multitask_lambda_monotone_when_aligned() {
    for l0 in [0.55, 0.7, 0.9] {
        for s0 in [0.1, 0.5, 0.9] {
            let traj = integrate_clipped_multitask(
                MultitaskScalarParams {
                    sigma1: s0,
                    sigma2: s0,
                    lambda: l0,
                },
                &IntegratorConfig::default(),
            )
            .unwrap();
            for pair in traj.states.windows(2) {
                assert!(pair[1][2] >= pair[0][2] - 1e-9, "lambda decreased");
            }
        }
    }
}

#[test]
fn trajectory_times_ascend_and_states_stay_in_unit_box() {
    let traj = integrate_clipped_single(
        ScalarPolicyPair {
            sigma: 0.42,
            lambda: 0.61,
        },
        &IntegratorConfig::default(),
    )
    .unwrap();
    assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    assert!(traj
        .states
        .iter()
        .all(|s| s.iter().all(|&v| (0.0..=1.0).contains(&v))));
    assert_eq!(traj.times.len(), traj.states.len());
}

/// Euler ascent at small step size lands in the same basin as the flow,
/// single-task and multitask, on every non-boundary-band grid cell.
#[test]
fn euler_terminal_classes_match_analytic_classification() {
    let n = 7;
    for i in 0..n {
        for j in 0..n {
            let s0 = grid_coordinate(i, n);
            let l0 = grid_coordinate(j, n);
            if (s0 + l0 - 1.0).abs() < BOUNDARY_BAND {
                continue;
            }
            let traj = discrete_gradient_ascent_single(
                ScalarPolicyPair {
                    sigma: s0,
                    lambda: l0,
                },
                1e-3,
                20_000,
            )
            .unwrap();
            assert_eq!(
                traj.terminal_class,
                classify_single(s0, l0).unwrap(),
                "cell ({s0}, {l0})"
            );
        }
    }
    for i in 0..n {
        for j in 0..n {
            let s0 = grid_coordinate(i, n);
            let l0 = grid_coordinate(j, n);
            if (l0 - 0.5).abs() < BOUNDARY_BAND {
                continue;
            }
            let traj = discrete_gradient_ascent_multitask(
                MultitaskScalarParams {
                    sigma1: s0,
                    sigma2: s0,
                    lambda: l0,
                },
                1e-3,
                20_000,
            )
            .unwrap();
            assert_eq!(
                traj.terminal_class,
                classify_multitask(l0).unwrap(),
                "cell ({s0}, {l0})"
            );
        }
    }
}

/// Drift-region area on a large grid approaches one half.
#[test]
fn drift_region_area_fraction_tends_to_half() {
    let n = 101;
    let mut drifted = 0usize;
    for i in 0..n {
        for j in 0..n {
            let class = classify_single(grid_coordinate(i, n), grid_coordinate(j, n)).unwrap();
            drifted += (class == DriftClass::Drifted) as usize;
        }
    }
    let fraction = drifted as f64 / (n * n) as f64;
    assert!((fraction - 0.5).abs() < 0.02, "fraction {fraction}");
}
