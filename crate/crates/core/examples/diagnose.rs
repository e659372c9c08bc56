//! Informativeness diagnosis: compare the KL divergence of a model against the
//! prior threshold `log(1/(1-ρ))`.
//!
//! ```text
//! cargo run --release --example diagnose -- [rho]
//! ```

use shiryaev_qcd::{critical_mean, diagnose, GaussianShiftModel, GeometricPrior, LaplaceShiftModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rho: f64 = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(0.05);
    let prior = GeometricPrior::new(rho)?;
    println!("rho = {rho}: threshold {:.6}, critical Gaussian shift {:.6}", prior.prior_threshold(), critical_mean(&prior));

    println!("{:>10} {:>5} {:>10} {:>12} {:>12}", "model", "m", "KL", "drift bound", "informative");
    for m in [0.1, 0.23, 0.32, 0.4, 0.6] {
        let report = diagnose(&GaussianShiftModel::new(m)?, &prior)?;
        println!("{:>10} {m:>5.2} {:>10.6} {:>+12.6} {:>12}", "gaussian", report.kl, report.drift_bound, report.informative);
    }
    // No closed form here: the KL comes from Monte Carlo.
    for m in [0.2, 0.5] {
        let report = diagnose(&LaplaceShiftModel::new(m)?, &prior)?;
        println!("{:>10} {m:>5.2} {:>10.6} {:>+12.6} {:>12}", "laplace", report.kl, report.drift_bound, report.informative);
    }
    Ok(())
}
