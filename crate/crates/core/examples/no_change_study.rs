//! Terminal posterior, small-posterior drift and trap statistics across the
//! shift grid `m = 0.10..0.60`, all from one pass over no-change data.
//!
//! ```text
//! cargo run --release --example no_change_study -- [trials] [horizon] [seed]
//! ```

use shiryaev_qcd::{
    critical_mean, default_m_grid, empirical_trap_level, no_change_study, smallest_reliable_bin, GaussianShiftModel,
    GeometricPrior, MonteCarloConfig, StudyOptions,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let mut config = MonteCarloConfig::no_change_study(args.get(2).copied().unwrap_or(2024));
    config.trials = args.first().copied().unwrap_or(200) as usize;
    config.horizon = args.get(1).copied().unwrap_or(5000) as usize;
    config.validate()?;

    let prior = GeometricPrior::new(0.05)?;
    println!("rho = {}, m_c = {:.4}, {} trials x {} steps", prior.rho(), critical_mean(&prior), config.trials, config.horizon);
    println!(
        "{:>5} {:>12} {:>10} | {:>10} {:>9} {:>10} {:>9} | {:>9} {:>7} {:>7}",
        "m", "mean X1_T", "se", "bin_high", "count", "drift", "se", "limit", "entry", "escape"
    );
    for m in default_m_grid() {
        let model = GaussianShiftModel::new(m)?;
        let study = no_change_study(m, &model, &prior, &config, &StudyOptions::default())?;
        let small = smallest_reliable_bin(&study.drift).ok_or("no reliable drift bin")?;
        println!(
            "{:>5.2} {:>12.4e} {:>10.2e} | {:>10.2e} {:>9} {:>+10.5} {:>9.2e} | {:>+9.5} {:>7.3} {:>7.3}   trap level {:?}",
            m,
            study.sweep.mean_terminal_posterior,
            study.sweep.std_error,
            small.bin_high,
            small.count,
            small.mean_increment,
            small.std_error,
            prior.log_survival() + 0.5 * m * m,
            study.trap.entry_fraction,
            study.trap.escape_fraction,
            empirical_trap_level(&study.drift, 3.0),
        );
    }
    Ok(())
}
