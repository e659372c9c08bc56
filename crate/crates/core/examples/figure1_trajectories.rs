//! Posterior paths under no change for one weak (m = 0.23) and one strong
//! (m = 0.40) shift, written as CSV and summarized on stdout.
//!
//! ```text
//! cargo run --release --example figure1_trajectories -- [out_dir] [seed]
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use shiryaev_qcd::{generate_trajectory, ChangeMode, GaussianShiftModel, GeometricPrior, MonteCarloConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    let seed: u64 = std::env::args().nth(2).map(|a| a.parse()).transpose()?.unwrap_or(2024);
    let prior = GeometricPrior::new(0.05)?;
    let config = MonteCarloConfig::new(1, 5000, seed, ChangeMode::NoChange)?;

    for m in [0.23, 0.40] {
        let trajectory = generate_trajectory(&GaussianShiftModel::new(m)?, &prior, &config, None, 0)?;
        let path = out.join(format!("figure1_m{m:.2}.csv"));
        trajectory.write_csv(BufWriter::new(File::create(&path)?))?;

        let xs: Vec<f64> = trajectory.posterior_path().collect();
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let max_tail = xs[1000..].iter().copied().fold(0.0, f64::max);
        println!(
            "m = {m:.2}: X1 at k=100/1000/5000 = {:.3e} / {:.3e} / {:.3e}, min {min:.3e}, max after k=1000 {max_tail:.3e} -> {}",
            xs[99],
            xs[999],
            xs[4999],
            path.display()
        );
    }
    Ok(())
}
