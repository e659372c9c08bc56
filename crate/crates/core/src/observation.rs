//! Change-time prior and pre/post-change observation densities.
//!
//! Observations are scalar. A model pairs a pre-change density `b¹` with a
//! post-change density `b²`; both are evaluated in the log domain so the
//! filter never has to touch densities that underflow (a unit normal at
//! `y = 40` is `e^{-800}`).

use rand::distr::Open01;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_count, check_nonnegative, check_open_unit, check_positive, Error, Result};
use crate::stats::RunningStats;

/// `log(1/√(2π))`.
pub const LN_STD_NORMAL_MODE: f64 = -0.918_938_533_204_672_8;

/// Geometric prior on the change time: `P(ν = k) = (1-ρ)^{k-1} ρ` for `k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct GeometricPrior {
    rho: f64,
}

impl GeometricPrior {
    pub fn new(rho: f64) -> Result<Self> {
        Ok(Self {
            rho: check_open_unit("rho", rho)?,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `log(1-ρ)`, the per-step log prior weight of "no change yet".
    pub fn log_survival(&self) -> f64 {
        (-self.rho).ln_1p()
    }

    /// `log(1/(1-ρ))`, the information the measurements must beat.
    pub fn prior_threshold(&self) -> f64 {
        -self.log_survival()
    }

    /// `P(ν > k) = (1-ρ)^k`.
    pub fn survival(&self, k: u64) -> f64 {
        (k as f64 * self.log_survival()).exp()
    }

    /// `log π_k`; `-inf` for `k = 0`.
    pub fn log_mass(&self, k: u64) -> f64 {
        if k == 0 {
            f64::NEG_INFINITY
        } else {
            (k - 1) as f64 * self.log_survival() + self.rho.ln()
        }
    }

    pub fn mass(&self, k: u64) -> f64 {
        self.log_mass(k).exp()
    }
}

impl TryFrom<f64> for GeometricPrior {
    type Error = Error;

    fn try_from(rho: f64) -> Result<Self> {
        Self::new(rho)
    }
}

impl From<GeometricPrior> for f64 {
    fn from(prior: GeometricPrior) -> f64 {
        prior.rho
    }
}

/// Which density an observation is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `b¹`, before the change.
    Pre,
    /// `b²`, at and after the change.
    Post,
}

/// A pre/post-change density pair over scalar observations.
///
/// Implementations are immutable and shared across concurrent trials; every
/// trial brings its own random source.
pub trait ObservationModel: Send + Sync {
    /// `log bⁱ(y)`. May be `-inf` outside the support.
    fn log_density(&self, regime: Regime, y: f64) -> f64;

    fn sample(&self, regime: Regime, rng: &mut dyn RngCore) -> f64;

    /// Declared upper bound `B` on both densities.
    fn density_bound(&self) -> f64;

    /// Exact `D(b¹‖b²)` when the model has one.
    fn kl_closed_form(&self) -> Option<f64> {
        None
    }

    /// Mean shift of a unit-variance Gaussian pair, used to report the critical mean.
    fn gaussian_shift(&self) -> Option<f64> {
        None
    }

    fn density(&self, regime: Regime, y: f64) -> f64 {
        self.log_density(regime, y).exp()
    }
}

impl<M: ObservationModel + ?Sized> ObservationModel for Box<M> {
    fn log_density(&self, regime: Regime, y: f64) -> f64 {
        (**self).log_density(regime, y)
    }

    fn sample(&self, regime: Regime, rng: &mut dyn RngCore) -> f64 {
        (**self).sample(regime, rng)
    }

    fn density_bound(&self) -> f64 {
        (**self).density_bound()
    }

    fn kl_closed_form(&self) -> Option<f64> {
        (**self).kl_closed_form()
    }

    fn gaussian_shift(&self) -> Option<f64> {
        (**self).gaussian_shift()
    }
}

/// Unit-variance normals with means `0` (pre) and `m` (post).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianShiftModel {
    m: f64,
}

impl GaussianShiftModel {
    /// `m = 0` is accepted and gives the degenerate model `b¹ ≡ b²`.
    pub fn new(m: f64) -> Result<Self> {
        Ok(Self {
            m: check_nonnegative("m", m)?,
        })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    fn mean(&self, regime: Regime) -> f64 {
        match regime {
            Regime::Pre => 0.0,
            Regime::Post => self.m,
        }
    }
}

impl ObservationModel for GaussianShiftModel {
    fn log_density(&self, regime: Regime, y: f64) -> f64 {
        let z = y - self.mean(regime);
        LN_STD_NORMAL_MODE - 0.5 * z * z
    }

    fn sample(&self, regime: Regime, rng: &mut dyn RngCore) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.mean(regime) + z
    }

    fn density_bound(&self) -> f64 {
        LN_STD_NORMAL_MODE.exp()
    }

    fn kl_closed_form(&self) -> Option<f64> {
        Some(0.5 * self.m * self.m)
    }

    fn gaussian_shift(&self) -> Option<f64> {
        Some(self.m)
    }
}

/// Unit-scale Laplace densities with locations `0` (pre) and `m` (post).
///
/// Has no closed form wired in, so its relative entropy goes through the
/// Monte Carlo estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceShiftModel {
    m: f64,
}

impl LaplaceShiftModel {
    pub fn new(m: f64) -> Result<Self> {
        Ok(Self {
            m: check_nonnegative("m", m)?,
        })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    fn location(&self, regime: Regime) -> f64 {
        match regime {
            Regime::Pre => 0.0,
            Regime::Post => self.m,
        }
    }
}

impl ObservationModel for LaplaceShiftModel {
    fn log_density(&self, regime: Regime, y: f64) -> f64 {
        -std::f64::consts::LN_2 - (y - self.location(regime)).abs()
    }

    fn sample(&self, regime: Regime, rng: &mut dyn RngCore) -> f64 {
        // inverse CDF on u ∈ (-1/2, 1/2)
        let u01: f64 = Open01.sample(rng);
        let u = u01 - 0.5;
        let tail = (-2.0 * u.abs()).ln_1p();
        self.location(regime) - u.signum() * tail
    }

    fn density_bound(&self) -> f64 {
        0.5
    }
}

/// Run-config model description, e.g. `{"model": "gaussian_shift", "m": 0.23}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    GaussianShift { m: f64 },
    LaplaceShift { m: f64 },
}

impl ModelSpec {
    /// Builds the model. Run configs require a strictly positive shift.
    pub fn build(&self) -> Result<Box<dyn ObservationModel>> {
        Ok(match *self {
            ModelSpec::GaussianShift { m } => {
                Box::new(GaussianShiftModel::new(check_positive("m", m)?)?)
            }
            ModelSpec::LaplaceShift { m } => {
                Box::new(LaplaceShiftModel::new(check_positive("m", m)?)?)
            }
        })
    }

    pub fn shift(&self) -> f64 {
        match *self {
            ModelSpec::GaussianShift { m } | ModelSpec::LaplaceShift { m } => m,
        }
    }
}

/// Direction of a Monte Carlo relative-entropy estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlDirection {
    /// `D(b¹‖b²) = E_∞[log(b¹/b²)]`, sampled pre-change.
    PrePost,
    /// `D(b²‖b¹) = E_0[log(b²/b¹)]`, sampled post-change.
    PostPre,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlOptions {
    pub samples: usize,
    /// Fail when the standard error at `samples` exceeds this.
    pub max_std_error: Option<f64>,
    pub seed: u64,
}

impl Default for KlOptions {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            max_std_error: None,
            seed: 0x6b6c_6469_7665_7267,
        }
    }
}

/// A relative-entropy value; `std_error` is zero for closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Plain Monte Carlo estimate of a relative entropy between the model's densities.
pub fn monte_carlo_kl<M: ObservationModel + ?Sized>(
    model: &M,
    direction: KlDirection,
    options: &KlOptions,
) -> Result<KlEstimate> {
    let samples = check_count("samples", options.samples)?;
    let (from, to) = match direction {
        KlDirection::PrePost => (Regime::Pre, Regime::Post),
        KlDirection::PostPre => (Regime::Post, Regime::Pre),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut stats = RunningStats::new();
    for _ in 0..samples {
        let y = model.sample(from, &mut rng);
        stats.push(model.log_density(from, y) - model.log_density(to, y));
    }
    let estimate = KlEstimate {
        value: stats.mean(),
        std_error: stats.std_error(),
        samples,
    };
    if let Some(tolerance) = options.max_std_error {
        if estimate.std_error.is_nan() || estimate.std_error > tolerance {
            return Err(Error::KlNotConverged {
                std_error: estimate.std_error,
                tolerance,
                samples,
            });
        }
    }
    Ok(estimate)
}

/// `D(b¹‖b²)`: the closed form when the model has one, Monte Carlo otherwise.
pub fn kl_pre_post<M: ObservationModel + ?Sized>(model: &M, options: &KlOptions) -> Result<KlEstimate> {
    match model.kl_closed_form() {
        Some(value) => Ok(KlEstimate {
            value,
            std_error: 0.0,
            samples: 0,
        }),
        None => monte_carlo_kl(model, KlDirection::PrePost, options),
    }
}
