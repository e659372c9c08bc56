//! Are the measurements informative enough to beat the geometric prior?
//!
//! Measurements are insufficiently informative when
//! `D(b¹‖b²) < log(1/(1-ρ))`. In that regime the expected log increment of
//! the no-change posterior, once the posterior is small, tends to
//! `log(1-ρ) + D(b¹‖b²) < 0`, and `log X̂¹_k` behaves as a weak practical
//! super-martingale: the statistic keeps growing more confident that a
//! change happened even when none did.
//!
//! For unit-variance Gaussians separated by `m`, `D = m²/2` and the
//! insufficiently informative shifts form the interval `0 < m < m_c` with
//! `m_c = √(2 log(1/(1-ρ)))`.

use serde::Serialize;

use crate::error::{check_positive, Result};
use crate::observation::{kl_pre_post, GeometricPrior, KlOptions, ObservationModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InformativenessReport {
    /// `D(b¹‖b²)`.
    pub kl: f64,
    /// `log(1/(1-ρ))`.
    pub prior_threshold: f64,
    /// `kl >= prior_threshold`. Equality counts as informative.
    pub informative: bool,
    /// `log(1-ρ) + kl`, the small-posterior limit of the expected log increment.
    pub drift_bound: f64,
    /// Critical Gaussian mean `m_c`, for Gaussian shift models only.
    pub critical_parameter: Option<f64>,
    #[serde(skip)]
    pub kl_std_error: f64,
}

/// Diagnoses a model with the default KL options (only used by models
/// without a closed form).
pub fn diagnose<M: ObservationModel + ?Sized>(
    model: &M,
    prior: &GeometricPrior,
) -> Result<InformativenessReport> {
    diagnose_with(model, prior, &KlOptions::default())
}

pub fn diagnose_with<M: ObservationModel + ?Sized>(
    model: &M,
    prior: &GeometricPrior,
    kl_options: &KlOptions,
) -> Result<InformativenessReport> {
    let kl = kl_pre_post(model, kl_options)?;
    let prior_threshold = prior.prior_threshold();
    Ok(InformativenessReport {
        kl: kl.value,
        prior_threshold,
        informative: kl.value >= prior_threshold,
        drift_bound: prior.log_survival() + kl.value,
        critical_parameter: model.gaussian_shift().map(|_| critical_mean(prior)),
        kl_std_error: kl.std_error,
    })
}

/// `m_c = √(2 log(1/(1-ρ)))`.
pub fn critical_mean(prior: &GeometricPrior) -> f64 {
    (2.0 * prior.prior_threshold()).sqrt()
}

/// Whether `m²/2 < log(1/(1-ρ))`, i.e. the Gaussian shift `m` is too weak.
pub fn membership(m: f64, prior: &GeometricPrior) -> Result<bool> {
    let m = check_positive("m", m)?;
    Ok(0.5 * m * m < prior.prior_threshold())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observation::{GaussianShiftModel, LaplaceShiftModel};
    use approx::assert_abs_diff_eq;

    fn prior(rho: f64) -> GeometricPrior {
        GeometricPrior::new(rho).unwrap()
    }

    #[test]
    fn weak_and_strong_gaussian_shifts() {
        let p = prior(0.05);
        let weak = diagnose(&GaussianShiftModel::new(0.23).unwrap(), &p).unwrap();
        assert!(!weak.informative);
        assert_abs_diff_eq!(weak.kl, 0.026_45, epsilon = 1e-12);
        assert_abs_diff_eq!(weak.prior_threshold, 0.051_293_294_387_550_48, epsilon = 1e-15);
        assert!(weak.drift_bound < 0.0);

        let strong = diagnose(&GaussianShiftModel::new(0.4).unwrap(), &p).unwrap();
        assert!(strong.informative);
        assert!(strong.drift_bound > 0.0);
        assert_abs_diff_eq!(strong.critical_parameter.unwrap(), 0.320_291_412_271_857_5, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_model_is_uninformative() {
        for rho in [0.01, 0.05, 0.5] {
            let p = prior(rho);
            let r = diagnose(&GaussianShiftModel::new(0.0).unwrap(), &p).unwrap();
            assert!(!r.informative);
            assert_eq!(r.drift_bound, p.log_survival());
            assert!(r.drift_bound < 0.0);
        }
    }

    #[test]
    fn boundary_counts_as_informative() {
        let p = prior(1.0 - (-2.0f64).exp());
        // m_c = 2 exactly here; D = 2 = log(1/(1-ρ)) up to rounding in ρ
        let r = diagnose(&GaussianShiftModel::new(critical_mean(&p)).unwrap(), &p).unwrap();
        assert_eq!(r.informative, r.kl >= r.prior_threshold);
        assert!(r.drift_bound.abs() < 1e-12);
    }

    #[test]
    fn critical_mean_values() {
        assert_abs_diff_eq!(critical_mean(&prior(0.05)), (2.0 * (1.0f64 / 0.95).ln()).sqrt(), epsilon = 4.0 * f64::EPSILON);
        assert_abs_diff_eq!(critical_mean(&prior(1.0 - (-2.0f64).exp())), 2.0, epsilon = 1e-12);
        let tiny = critical_mean(&prior(1e-8));
        assert_abs_diff_eq!(tiny, (2e-8f64).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(tiny, 1.414_213_6e-4, epsilon = 1e-10);
    }

    #[test]
    fn membership_examples() {
        let p = prior(0.05);
        assert!(membership(0.23, &p).unwrap());
        assert!(!membership(0.40, &p).unwrap());
        let mc = critical_mean(&p);
        for beta in [0.1, 0.5, 0.99] {
            assert!(membership(beta * mc, &p).unwrap());
        }
        assert!(!membership(mc, &p).unwrap());
        assert!(membership(0.0, &p).is_err());
        assert!(membership(-0.2, &p).is_err());
    }

    #[test]
    fn generic_model_reports_no_critical_parameter() {
        let r = diagnose_with(
            &LaplaceShiftModel::new(0.2).unwrap(),
            &prior(0.05),
            &KlOptions {
                samples: 50_000,
                ..KlOptions::default()
            },
        )
        .unwrap();
        assert!(r.critical_parameter.is_none());
        assert!(r.kl_std_error > 0.0);
    }

    #[test]
    fn report_json_fields() {
        let r = diagnose(&GaussianShiftModel::new(0.23).unwrap(), &prior(0.05)).unwrap();
        let v: serde_json::Value = serde_json::to_value(r).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(keys, ["critical_parameter", "drift_bound", "informative", "kl", "prior_threshold"]);
    }
}
