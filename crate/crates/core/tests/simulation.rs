//! Seeded Monte Carlo checks of the simulator, the drift tables and the detection metrics.

use shiryaev_qcd::stats::RunningStats;
use shiryaev_qcd::{
    detection_metrics, generate_batch, generate_trajectory, mean_terminal_posterior, monte_carlo_kl,
    no_change_study, sample_change_time, simulate_detection_metrics, ChangeMode, GaussianShiftModel,
    GeometricPrior, KlDirection, KlOptions, LaplaceShiftModel, MonteCarloConfig, StoppingRule, StudyOptions,
};
use shiryaev_qcd::simulator::trial_rng;

const SEED: u64 = 2024;

fn prior() -> GeometricPrior {
    GeometricPrior::new(0.05).unwrap()
}

#[test]
fn same_seed_same_batch() {
    let model = GaussianShiftModel::new(0.4).unwrap();
    let config = MonteCarloConfig::new(16, 300, 11, ChangeMode::SampleFromPrior).unwrap();
    let rule = StoppingRule::new(0.95).unwrap();
    let a = generate_batch(&model, &prior(), &config, Some(&rule)).unwrap();
    let b = generate_batch(&model, &prior(), &config, Some(&rule)).unwrap();
    assert_eq!(a, b);
    let other = MonteCarloConfig { seed: 12, ..config };
    assert_ne!(a, generate_batch(&model, &prior(), &other, Some(&rule)).unwrap());
}

#[test]
fn trial_does_not_depend_on_batch_size() {
    let model = GaussianShiftModel::new(0.23).unwrap();
    let small = MonteCarloConfig::new(4, 100, SEED, ChangeMode::SampleFromPrior).unwrap();
    let large = MonteCarloConfig { trials: 40, ..small };
    let a = generate_batch(&model, &prior(), &small, None).unwrap();
    let b = generate_batch(&model, &prior(), &large, None).unwrap();
    assert_eq!(a[..], b[..4]);
}

#[test]
fn change_time_moments() {
    let p = GeometricPrior::new(0.2).unwrap();
    let mut rng = trial_rng(SEED, 0);
    let stats: RunningStats = (0..100_000).map(|_| sample_change_time(&p, &mut rng) as f64).collect();
    // mean 1/ρ = 5, variance (1-ρ)/ρ² = 20
    assert!((stats.mean() - 5.0).abs() < 4.0 * stats.std_error());
    assert!((stats.variance() - 20.0).abs() < 0.6);
}

#[test]
fn observation_moments_split_at_change() {
    let m = 0.6;
    let model = GaussianShiftModel::new(m).unwrap();
    let config = MonteCarloConfig::new(1000, 200, SEED, ChangeMode::FixedNu(101)).unwrap();
    let batch = generate_batch(&model, &prior(), &config, None).unwrap();
    let (mut pre, mut post) = (RunningStats::new(), RunningStats::new());
    for t in &batch {
        assert_eq!(t.pre_change_len(), 100);
        pre.extend(t.observations[..100].iter().copied());
        post.extend(t.observations[100..].iter().copied());
    }
    assert_eq!(pre.count(), 100_000);
    assert!(pre.mean().abs() < 4.0 * pre.std_error());
    assert!((post.mean() - m).abs() < 4.0 * post.std_error());
    assert!((pre.variance() - 1.0).abs() < 0.02);
    assert!((post.variance() - 1.0).abs() < 0.02);
}

#[test]
fn no_change_mode_never_switches() {
    let model = GaussianShiftModel::new(0.6).unwrap();
    let config = MonteCarloConfig::new(200, 500, SEED, ChangeMode::NoChange).unwrap();
    let pooled: RunningStats = generate_batch(&model, &prior(), &config, None)
        .unwrap()
        .iter()
        .inspect(|t| assert_eq!(t.nu, None))
        .flat_map(|t| t.observations.clone())
        .collect();
    assert!(pooled.mean().abs() < 4.0 * pooled.std_error());
}

#[test]
fn informative_change_is_detected_quickly() {
    let model = GaussianShiftModel::new(0.4).unwrap();
    let config = MonteCarloConfig::new(1, 200, SEED, ChangeMode::FixedNu(1)).unwrap();
    let rule = StoppingRule::new(0.95).unwrap();
    let t = generate_trajectory(&model, &prior(), &config, Some(&rule), 0).unwrap();
    let tau = t.stop_time.expect("alarm within 200 post-change observations");
    assert!(tau <= 50, "tau = {tau}");
}

#[test]
fn weak_signal_terminal_posterior_collapses() {
    let config = MonteCarloConfig::no_change_study(SEED);
    let rows = mean_terminal_posterior(&[0.1], GaussianShiftModel::new, &prior(), &config).unwrap();
    assert!(rows[0].mean_terminal_posterior < 1e-3, "{:?}", rows[0]);
}

#[test]
fn weak_signal_rarely_escapes_trap() {
    let m = 0.23;
    let model = GaussianShiftModel::new(m).unwrap();
    let config = MonteCarloConfig::no_change_study(SEED);
    let study = no_change_study(m, &model, &prior(), &config, &StudyOptions::default()).unwrap();
    assert!(study.trap.entry_fraction > 0.99, "{:?}", study.trap);
    assert!(study.trap.escape_fraction < 0.05, "{:?}", study.trap);
}

#[test]
fn false_alarms_respect_threshold() {
    let model = GaussianShiftModel::new(0.4).unwrap();
    let rule = StoppingRule::new(0.95).unwrap();
    let config = MonteCarloConfig::new(2000, 2000, SEED, ChangeMode::SampleFromPrior).unwrap();
    let stored = generate_batch(&model, &prior(), &config, Some(&rule)).unwrap();
    let from_paths = detection_metrics(&stored, &rule, 0.01).unwrap();
    let streamed = simulate_detection_metrics(&model, &prior(), &config, &rule, 0.01).unwrap();
    assert_eq!(from_paths, streamed);
    assert!(from_paths.pfa < 0.05);
    assert_eq!(from_paths.censored, 0);
    assert!((from_paths.cost - (0.01 * from_paths.add + from_paths.pfa)).abs() < 1e-15);
}

#[test]
fn uninformative_model_alarms_on_the_prior_clock() {
    // With b¹ = b², the posterior is (1-ρ)^k and τ = 59 on every path, so
    // P(τ < ν) = P(ν > 59) = 0.95^59.
    let model = GaussianShiftModel::new(0.0).unwrap();
    let rule = StoppingRule::new(0.95).unwrap();
    let config = MonteCarloConfig::new(20_000, 100, SEED, ChangeMode::SampleFromPrior)
        .unwrap()
        .with_stop_at_alarm(true);
    let metrics = simulate_detection_metrics(&model, &prior(), &config, &rule, 0.01).unwrap();
    let exact = 0.95f64.powi(59);
    let se = (exact * (1.0 - exact) / 20_000.0).sqrt();
    assert!((metrics.pfa - exact).abs() < 4.0 * se, "pfa {} vs {exact}", metrics.pfa);
}

#[test]
fn kl_estimates_match_closed_form_and_are_nonnegative() {
    for (i, m) in [0.1, 0.23, 0.4, 0.6].into_iter().enumerate() {
        let model = GaussianShiftModel::new(m).unwrap();
        let options = KlOptions {
            samples: 200_000,
            max_std_error: None,
            seed: 100 + i as u64,
        };
        for direction in [KlDirection::PrePost, KlDirection::PostPre] {
            let est = monte_carlo_kl(&model, direction, &options).unwrap();
            assert!((est.value - m * m / 2.0).abs() < 4.0 * est.std_error, "{direction:?} m={m}: {est:?}");
            assert!(est.value >= -3.0 * est.std_error);
        }
    }
}

#[test]
fn laplace_kl_matches_its_closed_form() {
    let m: f64 = 0.5;
    let model = LaplaceShiftModel::new(m).unwrap();
    let options = KlOptions {
        samples: 400_000,
        max_std_error: None,
        seed: SEED,
    };
    let est = monte_carlo_kl(&model, KlDirection::PrePost, &options).unwrap();
    let exact = m + (-m).exp() - 1.0;
    assert!((est.value - exact).abs() < 4.0 * est.std_error, "{est:?} vs {exact}");
}
