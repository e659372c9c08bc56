//! Mean terminal posterior `E_∞[X̂¹_T]` over the shift grid, with the largest
//! jump between neighbouring shifts.
//!
//! ```text
//! cargo run --release --example figure2_sweep -- [trials] [horizon] [seed]
//! ```

use shiryaev_qcd::simulator::write_sweep_csv;
use shiryaev_qcd::{
    critical_mean, default_m_grid, mean_terminal_posterior, ChangeMode, GaussianShiftModel, GeometricPrior,
    MonteCarloConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let trials = args.first().copied().unwrap_or(1000) as usize;
    let horizon = args.get(1).copied().unwrap_or(5000) as usize;
    let seed = args.get(2).copied().unwrap_or(2024);

    let prior = GeometricPrior::new(0.05)?;
    let config = MonteCarloConfig::new(trials, horizon, seed, ChangeMode::NoChange)?;
    let rows = mean_terminal_posterior(&default_m_grid(), GaussianShiftModel::new, &prior, &config)?;
    write_sweep_csv(std::io::stdout().lock(), &rows)?;

    let jump = rows
        .windows(2)
        .max_by(|a, b| {
            let da = a[1].mean_terminal_posterior - a[0].mean_terminal_posterior;
            let db = b[1].mean_terminal_posterior - b[0].mean_terminal_posterior;
            da.total_cmp(&db)
        })
        .expect("grid has at least two shifts");
    eprintln!(
        "largest jump between m = {} and m = {} (critical shift {:.4})",
        jump[0].m,
        jump[1].m,
        critical_mean(&prior)
    );
    Ok(())
}
