//! Run the recursive posterior on a short sequence and compare every step
//! against brute-force enumeration over the change time.
//!
//! ```text
//! cargo run --release --example filter_oracle
//! ```

use shiryaev_qcd::{brute_force_posterior, run, GaussianShiftModel, GeometricPrior, StoppingRule};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = GaussianShiftModel::new(0.6)?;
    let prior = GeometricPrior::new(0.05)?;
    let rule = StoppingRule::new(0.95)?;
    let ys = [0.3, -1.2, 0.8, 0.1, 1.9, 0.7, 1.4, 0.2, 2.1, 0.9, 1.6, 1.1];

    let filtered = run(&ys, &model, &prior, &rule)?;
    println!("{:>3} {:>6} {:>14} {:>14} {:>10}", "k", "y", "recursive", "enumerated", "rel err");
    for (k, state) in filtered.path.iter().enumerate() {
        let oracle = brute_force_posterior(&ys[..=k], &model, &prior)?;
        println!(
            "{:>3} {:>6.2} {:>14.10} {:>14.10} {:>10.2e}",
            state.k,
            ys[k],
            state.x1,
            oracle,
            (state.x1 - oracle).abs() / oracle
        );
    }
    println!("alarm (X1 < {}) at k = {:?}", rule.threshold(), filtered.stop_time);
    Ok(())
}
