//! Plugging a user-defined observation model into the filter and diagnosis.
//!
//! The model here is a unit-variance Gaussian whose post-change law also
//! doubles the variance, so the KL divergence has no built-in closed form and
//! is estimated by Monte Carlo.
//!
//! ```text
//! cargo run --release --example custom_model
//! ```

use rand::RngCore;
use rand_distr::{Distribution, Normal};
use shiryaev_qcd::observation::LN_STD_NORMAL_MODE;
use shiryaev_qcd::{
    diagnose, generate_trajectory, ChangeMode, GeometricPrior, MonteCarloConfig, ObservationModel, Regime,
    StoppingRule,
};

struct ShiftAndSpread {
    m: f64,
}

impl ShiftAndSpread {
    fn params(&self, regime: Regime) -> (f64, f64) {
        match regime {
            Regime::Pre => (0.0, 1.0),
            Regime::Post => (self.m, std::f64::consts::SQRT_2),
        }
    }
}

impl ObservationModel for ShiftAndSpread {
    fn log_density(&self, regime: Regime, y: f64) -> f64 {
        let (mean, sd) = self.params(regime);
        let z = (y - mean) / sd;
        LN_STD_NORMAL_MODE - sd.ln() - 0.5 * z * z
    }

    fn sample(&self, regime: Regime, rng: &mut dyn RngCore) -> f64 {
        let (mean, sd) = self.params(regime);
        Normal::new(mean, sd).expect("finite parameters").sample(rng)
    }

    fn density_bound(&self) -> f64 {
        LN_STD_NORMAL_MODE.exp()
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let prior = GeometricPrior::new(0.05)?;
    let model = ShiftAndSpread { m: 0.2 };

    // KL(N(0,1) || N(m,2)) = ln √2 + (1 + m²)/4 - 1/2
    let exact = std::f64::consts::SQRT_2.ln() + (1.0 + model.m * model.m) / 4.0 - 0.5;
    let report = diagnose(&model, &prior)?;
    println!(
        "KL ~ {:.5} (se {:.1e}, exact {exact:.5}), threshold {:.5}, informative: {}",
        report.kl,
        report.kl_std_error,
        report.prior_threshold,
        report.informative
    );

    let rule = StoppingRule::new(0.95)?;
    let config = MonteCarloConfig::new(1, 400, 7, ChangeMode::FixedNu(100))?;
    let trajectory = generate_trajectory(&model, &prior, &config, Some(&rule), 0)?;
    println!("change at nu = 100, alarm at tau = {:?}", trajectory.stop_time);
    Ok(())
}
