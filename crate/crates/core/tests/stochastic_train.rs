//! Monte Carlo checks of the sampling and estimation layer: estimator
//! means against analytic gradients, and stochastic training endpoints
//! against the flow classification.

use driftlab::rng::RngStream;
use driftlab::signaling::{MultitaskScalarParams, ScalarPolicyPair, SignalingGame};
use driftlab::stochastic::{
    multitask_sgd_train, reinforce_estimate_with_baseline, sample_episode, Baseline, TrainConfig,
};
use rand::Rng;

/// Per-episode estimator samples at a fixed policy, with mean and standard
/// error per component.
fn estimator_stats(
    policy: ScalarPolicyPair,
    game: &SignalingGame,
    episodes: usize,
    baseline: Option<f64>,
    stream: RngStream,
) -> ([f64; 2], [f64; 2]) {
    let mut rng = stream.rng();
    let mut sum = [0.0f64; 2];
    let mut sum_sq = [0.0f64; 2];
    let b = baseline.unwrap_or(0.0);
    for _ in 0..episodes {
        let ep = sample_episode(policy, game, &mut rng).unwrap();
        let (gs, gl) = reinforce_estimate_with_baseline(&[ep], policy, b).unwrap();
        for (i, g) in [gs, gl].into_iter().enumerate() {
            sum[i] += g;
            sum_sq[i] += g * g;
        }
    }
    let n = episodes as f64;
    let mean = [sum[0] / n, sum[1] / n];
    let se = [
        ((sum_sq[0] / n - mean[0] * mean[0]) / n).sqrt(),
        ((sum_sq[1] / n - mean[1] * mean[1]) / n).sqrt(),
    ];
    (mean, se)
}

fn full_gradient(policy: ScalarPolicyPair) -> [f64; 2] {
    [2.0 * policy.lambda - 1.0, 2.0 * policy.sigma - 1.0]
}

#[test]
fn uniform_play_earns_half() {
    let g = SignalingGame::preset_r(2);
    let mut rng = RngStream::new(200, 0).rng();
    let n = 100_000;
    let mut total = 0.0;
    for _ in 0..n {
        total += sample_episode(ScalarPolicyPair { sigma: 0.5, lambda: 0.5 }, &g, &mut rng)
            .unwrap()
            .reward;
    }
    let mean = total / n as f64;
    let se = (0.25 / n as f64).sqrt();
    assert!((mean - 0.5).abs() < 3.0 * se, "mean {mean}");
}

#[test]
fn estimator_mean_matches_analytic_gradient_at_named_points() {
    let g = SignalingGame::preset_r(2);
    for (k, &(s, l)) in [(0.5, 0.5), (0.3, 0.9), (0.9, 0.3)].iter().enumerate() {
        let policy = ScalarPolicyPair { sigma: s, lambda: l };
        let (mean, se) = estimator_stats(policy, &g, 1_000_000, None, RngStream::new(201, k as u64));
        let expected = full_gradient(policy);
        for i in 0..2 {
            assert!(
                (mean[i] - expected[i]).abs() < 3.0 * se[i],
                "point ({s},{l}) component {i}: {} vs {} (se {})",
                mean[i],
                expected[i],
                se[i]
            );
        }
    }
}

/// A reward baseline shifts nothing: with the baseline fixed relative to
/// the batch, the centered estimator has the same mean.
#[test]
fn baseline_changes_nothing_but_variance() {
    let g = SignalingGame::preset_r(2);
    let mut point_rng = RngStream::new(202, 0).rng();
    for k in 0..20 {
        let policy = ScalarPolicyPair {
            sigma: point_rng.gen_range(0.05..0.95),
            lambda: point_rng.gen_range(0.05..0.95),
        };
        let episodes = 200_000;
        let (plain, se_plain) =
            estimator_stats(policy, &g, episodes, None, RngStream::new(203, 2 * k));
        // a fixed baseline near the expected reward, as the moving average
        // would supply after warm-up
        let b = 0.4;
        let (centered, se_centered) =
            estimator_stats(policy, &g, episodes, Some(b), RngStream::new(203, 2 * k + 1));
        for i in 0..2 {
            let se = (se_plain[i] * se_plain[i] + se_centered[i] * se_centered[i]).sqrt();
            assert!(
                (plain[i] - centered[i]).abs() < 2.0 * se,
                "point {k} component {i}"
            );
        }
    }
}

#[test]
fn sgd_reaches_alignment_from_strong_initialization() {
    let g = SignalingGame::preset_r(2);
    let cfg = TrainConfig {
        learning_rate: 0.05,
        episodes: 20_000,
        batch_size: 32,
        baseline: Baseline::None,
        ..TrainConfig::default()
    };
    let mut aligned = 0;
    for seed in 0..100 {
        let run = driftlab::stochastic::sgd_train(
            ScalarPolicyPair { sigma: 0.9, lambda: 0.9 },
            &g,
            &cfg,
            RngStream::new(204, seed),
        )
        .unwrap();
        aligned += (run.trajectory.terminal_state()[1] > 0.99) as usize;
    }
    assert!(aligned >= 95, "aligned in {aligned}/100 seeds");
}

#[test]
fn sgd_drifts_from_prop1_region() {
    let g = SignalingGame::preset_r(2);
    let cfg = TrainConfig {
        learning_rate: 0.05,
        episodes: 20_000,
        batch_size: 32,
        baseline: Baseline::None,
        ..TrainConfig::default()
    };
    let mut drifted = 0;
    for seed in 0..100 {
        let run = driftlab::stochastic::sgd_train(
            ScalarPolicyPair { sigma: 0.2, lambda: 0.6 },
            &g,
            &cfg,
            RngStream::new(205, seed),
        )
        .unwrap();
        drifted += (run.trajectory.terminal_state()[1] < 0.01) as usize;
    }
    assert!(drifted >= 95, "drifted in {drifted}/100 seeds");
}

/// Started exactly at the pooling point, noise alone picks the basin:
/// alignment and drift are equally likely.
#[test]
fn sgd_from_pooling_point_is_a_coin_flip() {
    let g = SignalingGame::preset_r(2);
    let cfg = TrainConfig {
        learning_rate: 0.05,
        episodes: 20_000,
        batch_size: 32,
        baseline: Baseline::None,
        ..TrainConfig::default()
    };
    let mut aligned = 0;
    for seed in 0..200 {
        let run = driftlab::stochastic::sgd_train(
            ScalarPolicyPair { sigma: 0.5, lambda: 0.5 },
            &g,
            &cfg,
            RngStream::new(206, seed),
        )
        .unwrap();
        aligned += (run.trajectory.terminal_state()[1] > 0.5) as usize;
    }
    let fraction = aligned as f64 / 200.0;
    assert!((fraction - 0.5).abs() <= 0.10, "aligned fraction {fraction}");
}

#[test]
fn multitask_sgd_avoids_drift_with_good_executor() {
    let g = SignalingGame::preset_r(2);
    let gp = SignalingGame::preset_r_prime(2);
    let cfg = TrainConfig {
        learning_rate: 0.05,
        episodes: 20_000,
        batch_size: 32,
        baseline: Baseline::None,
        ..TrainConfig::default()
    };
    let mut aligned = 0;
    for seed in 0..100 {
        let run = multitask_sgd_train(
            MultitaskScalarParams { sigma1: 0.2, sigma2: 0.2, lambda: 0.7 },
            (&g, &gp),
            &cfg,
            RngStream::new(207, seed),
        )
        .unwrap();
        aligned += (run.trajectory.terminal_state()[2] > 0.99) as usize;
    }
    assert!(aligned >= 95, "aligned in {aligned}/100 seeds");
}

#[test]
fn multitask_sgd_drifts_with_bad_executor() {
    let g = SignalingGame::preset_r(2);
    let gp = SignalingGame::preset_r_prime(2);
    let cfg = TrainConfig {
        learning_rate: 0.05,
        episodes: 20_000,
        batch_size: 32,
        baseline: Baseline::None,
        ..TrainConfig::default()
    };
    let mut drifted = 0;
    for seed in 0..100 {
        let run = multitask_sgd_train(
            MultitaskScalarParams { sigma1: 0.2, sigma2: 0.2, lambda: 0.3 },
            (&g, &gp),
            &cfg,
            RngStream::new(208, seed),
        )
        .unwrap();
        drifted += (run.trajectory.terminal_state()[2] < 0.01) as usize;
    }
    assert!(drifted >= 95, "drifted in {drifted}/100 seeds");
}

/// The empirical multitask drift rate does not depend on the instructor
/// initialization.
#[test]
fn multitask_drift_rate_independent_of_sigma0() {
    let g = SignalingGame::preset_r(2);
    let gp = SignalingGame::preset_r_prime(2);
    let cfg = TrainConfig {
        learning_rate: 0.05,
        episodes: 20_000,
        batch_size: 32,
        baseline: Baseline::None,
        ..TrainConfig::default()
    };
    let mut rates = Vec::new();
    for (i, &s0) in [0.1, 0.5, 0.9].iter().enumerate() {
        let mut aligned = 0;
        for seed in 0..100 {
            let run = multitask_sgd_train(
                MultitaskScalarParams { sigma1: s0, sigma2: s0, lambda: 0.7 },
                (&g, &gp),
                &cfg,
                RngStream::new(209 + i as u64, seed),
            )
            .unwrap();
            aligned += (run.trajectory.terminal_state()[2] > 0.5) as usize;
        }
        rates.push(aligned as f64 / 100.0);
    }
    for r in &rates {
        assert!(*r >= 0.9, "alignment rate {r}");
    }
    for pair in rates.windows(2) {
        assert!((pair[0] - pair[1]).abs() <= 0.1, "rates {rates:?}");
    }
}
