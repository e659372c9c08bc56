//! Detection delay versus false alarms for several thresholds `h`, with the
//! change time drawn from the prior.
//!
//! ```text
//! cargo run --release --example detection_tradeoff -- [m] [trials]
//! ```

use shiryaev_qcd::{
    simulate_detection_metrics, ChangeMode, GaussianShiftModel, GeometricPrior, MonteCarloConfig, StoppingRule,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m: f64 = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(0.4);
    let trials: usize = std::env::args().nth(2).map(|a| a.parse()).transpose()?.unwrap_or(2000);
    let model = GaussianShiftModel::new(m)?;
    let prior = GeometricPrior::new(0.05)?;
    let config = MonteCarloConfig::new(trials, 4000, 2024, ChangeMode::SampleFromPrior)?.with_stop_at_alarm(true);

    println!("m = {m}, rho = {}, {trials} trials", prior.rho());
    println!("{:>6} {:>8} {:>8} {:>8} {:>10} {:>9}", "h", "1-h", "PFA", "ADD", "cost c=.01", "censored");
    for h in [0.5, 0.8, 0.9, 0.95, 0.99, 0.999] {
        let rule = StoppingRule::new(h)?;
        let metrics = simulate_detection_metrics(&model, &prior, &config, &rule, 0.01)?;
        println!(
            "{h:>6} {:>8.3} {:>8.4} {:>8.2} {:>10.4} {:>9}",
            1.0 - h,
            metrics.pfa,
            metrics.add,
            metrics.cost,
            metrics.censored
        );
        if let Some(warning) = metrics.censoring_warning() {
            eprintln!("{warning}");
        }
    }
    Ok(())
}
