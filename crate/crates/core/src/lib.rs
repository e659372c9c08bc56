//! Shiryaev's Bayesian quickest change detection with a geometric change-time
//! prior, plus the tooling to check when its test statistic can be trusted.
//!
//! - [`filter`]: the scalar no-change posterior recursion, the stopping rule and
//!   a brute-force Bayes oracle.
//! - [`observation`]: the prior and the pre/post-change densities.
//! - [`informativeness`]: whether the relative entropy between the densities
//!   beats the prior, and the critical Gaussian mean.
//! - [`simulator`]: seeded change-point trajectories and Monte Carlo sweeps.
//! - [`analysis`]: detection delay and false alarms, binned drift of
//!   `log X̂¹`, trap entry and escape frequencies.
//! - [`cli`]: the `shiryaev` command line.
//!
//! ```
//! use shiryaev_qcd::{critical_mean, diagnose, GaussianShiftModel, GeometricPrior};
//!
//! let prior = GeometricPrior::new(0.05)?;
//! let report = diagnose(&GaussianShiftModel::new(0.23)?, &prior)?;
//! assert!(!report.informative);
//! assert!((critical_mean(&prior) - 0.3203).abs() < 1e-4);
//! # Ok::<(), shiryaev_qcd::Error>(())
//! ```

pub mod analysis;
pub mod cli;
pub mod error;
pub mod filter;
pub mod informativeness;
pub mod observation;
pub mod simulator;
pub mod stats;

pub use analysis::{
    detection_metrics, empirical_trap_level, estimate_drift, no_change_study, simulate_detection_metrics,
    smallest_reliable_bin, trap_statistics, DetectionMetrics, DriftBinning, DriftConditioning, DriftEstimate,
    NoChangeStudy, StudyOptions, TrapStatistics,
};
pub use error::{Error, Result};
pub use filter::{brute_force_posterior, run, FilterRun, FilterState, StoppingRule};
pub use informativeness::{critical_mean, diagnose, membership, InformativenessReport};
pub use observation::{
    kl_pre_post, monte_carlo_kl, GaussianShiftModel, GeometricPrior, KlDirection, KlEstimate, KlOptions,
    LaplaceShiftModel, ModelSpec, ObservationModel, Regime,
};
pub use simulator::{
    default_m_grid, generate_batch, generate_trajectory, mean_terminal_posterior, sample_change_time, ChangeMode,
    MonteCarloConfig, SweepRow, Trajectory,
};
