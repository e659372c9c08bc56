//! Property tests for the recursive posterior and the informativeness split.

use proptest::prelude::*;
use shiryaev_qcd::{
    brute_force_posterior, critical_mean, diagnose, membership, run, FilterState, GaussianShiftModel,
    GeometricPrior, StoppingRule,
};

fn gaussian_log_pdf(y: f64, mean: f64) -> f64 {
    -0.5 * (y - mean).powi(2) - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// The normalized factor M_k written out with unshifted densities.
fn direct_factor(y: f64, prev: f64, m: f64, rho: f64) -> f64 {
    let b1 = gaussian_log_pdf(y, 0.0).exp();
    let b2 = gaussian_log_pdf(y, m).exp();
    (1.0 - rho) * b1 / (b2 + (1.0 - rho) * (b1 - b2) * prev)
}

fn shift() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.1, 0.23, 0.4, 0.6])
}

fn rho() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.01, 0.05, 0.2])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn recursion_matches_enumeration(
        m in shift(),
        rho in rho(),
        ys in prop::collection::vec(-4.0f64..5.0, 1..=20),
    ) {
        let model = GaussianShiftModel::new(m).unwrap();
        let prior = GeometricPrior::new(rho).unwrap();
        let filtered = run(&ys, &model, &prior, &StoppingRule::new(0.95).unwrap()).unwrap();
        for k in 1..=ys.len() {
            let oracle = brute_force_posterior(&ys[..k], &model, &prior).unwrap();
            let got = filtered.path[k - 1].x1;
            prop_assert!((got - oracle).abs() <= 1e-9 * oracle, "k={k}: {got} vs {oracle}");
        }
    }

    #[test]
    fn posterior_is_product_of_factors(
        m in shift(),
        rho in rho(),
        ys in prop::collection::vec(-4.0f64..5.0, 1..=60),
    ) {
        let model = GaussianShiftModel::new(m).unwrap();
        let prior = GeometricPrior::new(rho).unwrap();
        let mut state = FilterState::init();
        let mut product = 1.0;
        for &y in &ys {
            let direct = direct_factor(y, state.x1, m, rho);
            state = state.step(y, &model, &prior).unwrap();
            let factor = state.last_log_m.unwrap().exp();
            prop_assert!((factor - direct).abs() <= 1e-9 * direct);
            product *= direct;
            prop_assert!((state.x1 - product).abs() <= 1e-9 * product);
        }
    }

    #[test]
    fn posterior_stays_in_unit_interval(
        m in 0.0f64..3.0,
        rho in 0.001f64..0.999,
        ys in prop::collection::vec(-40.0f64..=40.0, 1..=80),
    ) {
        let model = GaussianShiftModel::new(m).unwrap();
        let prior = GeometricPrior::new(rho).unwrap();
        let mut state = FilterState::init();
        for &y in &ys {
            state = state.step(y, &model, &prior).unwrap();
            prop_assert!((0.0..=1.0).contains(&state.x1), "x1 = {}", state.x1);
        }
    }

    #[test]
    fn log_and_linear_tracks_agree(
        m in shift(),
        rho in rho(),
        ys in prop::collection::vec(-3.0f64..3.0, 1..=200),
    ) {
        let model = GaussianShiftModel::new(m).unwrap();
        let prior = GeometricPrior::new(rho).unwrap();
        let mut state = FilterState::init();
        for &y in &ys {
            state = state.step(y, &model, &prior).unwrap();
            if state.x1 > 1e-250 {
                prop_assert!((state.x1.ln() - state.log_x1).abs() <= 1e-9 * state.log_x1.abs().max(1.0));
            } else {
                prop_assert!(state.log_x1 < (1e-250f64).ln() + 1e-6);
            }
        }
    }

    #[test]
    fn critical_mean_grows_with_rho(a in 0.001f64..0.999, b in 0.001f64..0.999) {
        prop_assume!(a < b);
        let lo = critical_mean(&GeometricPrior::new(a).unwrap());
        let hi = critical_mean(&GeometricPrior::new(b).unwrap());
        prop_assert!(lo < hi);
    }
}

#[test]
fn informative_iff_shift_reaches_critical_mean() {
    let mut checked = 0;
    for i in 0..10 {
        let rho = 0.01 + 0.09 * i as f64;
        let prior = GeometricPrior::new(rho).unwrap();
        let m_c = (2.0 * (1.0 / (1.0 - rho)).ln()).sqrt();
        for j in 0..10 {
            let m = 0.05 + 0.25 * j as f64;
            if (m - m_c).abs() < 1e-9 {
                continue;
            }
            let model = GaussianShiftModel::new(m).unwrap();
            let report = diagnose(&model, &prior).unwrap();
            assert_eq!(report.informative, m > m_c, "m={m}, rho={rho}");
            assert_eq!(membership(m, &prior).unwrap(), m < m_c, "m={m}, rho={rho}");
            assert!((report.drift_bound - ((1.0 - rho).ln() + m * m / 2.0)).abs() < 1e-12);
            checked += 1;
        }
    }
    assert_eq!(checked, 100);
}
