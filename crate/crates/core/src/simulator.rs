//! Seeded change-point trajectories and Monte Carlo batches.
//!
//! Every trial owns a ChaCha8 stream selected by `(seed, trial_index)`, so a
//! trial's draws do not depend on which other trials ran or in what order.
//! Batches run on rayon and are always reduced in trial-index order.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_count, Error, Result};
use crate::filter::{fmt_full, write_path_csv, FilterState, StoppingRule};
use crate::observation::{GeometricPrior, ObservationModel, Regime};
use crate::stats::RunningStats;

/// How the change time of each trial is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeMode {
    /// `ν ~ π` (measure `P_π`).
    SampleFromPrior,
    /// `ν = n` for every trial (measure `P_n`).
    FixedNu(u64),
    /// No change ever (measure `P_∞`).
    NoChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub trials: usize,
    /// Observations per trial.
    pub horizon: usize,
    pub seed: u64,
    pub change_mode: ChangeMode,
    /// Stop generating a trial once the stopping rule fires.
    #[serde(default)]
    pub stop_at_alarm: bool,
}

impl MonteCarloConfig {
    pub fn new(trials: usize, horizon: usize, seed: u64, change_mode: ChangeMode) -> Result<Self> {
        let config = Self {
            trials,
            horizon,
            seed,
            change_mode,
            stop_at_alarm: false,
        };
        config.validate()?;
        Ok(config)
    }

    /// 1000 no-change trials of 5000 observations.
    pub fn no_change_study(seed: u64) -> Self {
        Self {
            trials: 1000,
            horizon: 5000,
            seed,
            change_mode: ChangeMode::NoChange,
            stop_at_alarm: false,
        }
    }

    pub fn with_stop_at_alarm(mut self, stop: bool) -> Self {
        self.stop_at_alarm = stop;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_count("trials", self.trials)?;
        check_count("horizon", self.horizon)?;
        if let ChangeMode::FixedNu(nu) = self.change_mode {
            check_count("nu", nu as usize)?;
        }
        Ok(())
    }
}

/// The random stream of one trial.
pub fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

/// Draws `ν ∈ {1, 2, …}` with `P(ν = k) = (1-ρ)^{k-1} ρ`.
pub fn sample_change_time<R: Rng + ?Sized>(prior: &GeometricPrior, rng: &mut R) -> u64 {
    // rand_distr counts failures before the first success
    let failures = Geometric::new(prior.rho())
        .expect("prior rho is inside (0, 1)")
        .sample(rng);
    failures.saturating_add(1)
}

/// One filter update inside a simulated trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub y: f64,
    pub prev: FilterState,
    pub state: FilterState,
    /// The observation came from `b¹` (`k < ν`).
    pub pre_change: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSummary {
    pub trial: usize,
    pub nu: Option<u64>,
    pub stop_time: Option<u64>,
    pub terminal: FilterState,
}

/// Runs one trial, handing every step to `observer` instead of storing the path.
pub fn simulate_trial<M, F>(
    model: &M,
    prior: &GeometricPrior,
    config: &MonteCarloConfig,
    rule: Option<&StoppingRule>,
    trial_index: usize,
    mut observer: F,
) -> Result<TrialSummary>
where
    M: ObservationModel + ?Sized,
    F: FnMut(&StepRecord),
{
    let mut rng = trial_rng(config.seed, trial_index as u64);
    let nu = match config.change_mode {
        ChangeMode::SampleFromPrior => Some(sample_change_time(prior, &mut rng)),
        ChangeMode::FixedNu(n) => Some(n),
        ChangeMode::NoChange => None,
    };

    let mut state = FilterState::init();
    let mut stop_time = None;
    for k in 1..=config.horizon as u64 {
        let pre_change = nu.is_none_or(|n| k < n);
        let regime = if pre_change { Regime::Pre } else { Regime::Post };
        let y = model.sample(regime, &mut rng);
        let next = state.step(y, model, prior)?;
        observer(&StepRecord {
            y,
            prev: state,
            state: next,
            pre_change,
        });
        state = next;
        if stop_time.is_none() && rule.is_some_and(|r| r.stopped(&state)) {
            stop_time = Some(k);
            if config.stop_at_alarm {
                break;
            }
        }
    }
    Ok(TrialSummary {
        trial: trial_index,
        nu,
        stop_time,
        terminal: state,
    })
}

/// A stored trial: change time, observations, posterior path and stop time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `None` for a change that never happens.
    pub nu: Option<u64>,
    pub observations: Vec<f64>,
    /// `path[i]` is the state after `observations[i]`.
    pub path: Vec<FilterState>,
    pub stop_time: Option<u64>,
}

impl Trajectory {
    pub fn posterior_path(&self) -> impl Iterator<Item = f64> + '_ {
        self.path.iter().map(|s| s.x1)
    }

    pub fn terminal(&self) -> Option<&FilterState> {
        self.path.last()
    }

    /// Number of leading observations drawn before the change.
    pub fn pre_change_len(&self) -> usize {
        match self.nu {
            None => self.observations.len(),
            Some(n) => (n.saturating_sub(1) as usize).min(self.observations.len()),
        }
    }

    /// Pairs of consecutive states `(X̂_{k-1}, X̂_k)`, starting from `X̂_0`.
    pub fn transitions(&self) -> impl Iterator<Item = (FilterState, FilterState)> + '_ {
        std::iter::once(FilterState::init())
            .chain(self.path.iter().copied())
            .zip(self.path.iter().copied())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_path_csv(out, &self.observations, &self.path)
    }
}

pub fn generate_trajectory<M: ObservationModel + ?Sized>(
    model: &M,
    prior: &GeometricPrior,
    config: &MonteCarloConfig,
    rule: Option<&StoppingRule>,
    trial_index: usize,
) -> Result<Trajectory> {
    config.validate()?;
    let mut observations = Vec::with_capacity(config.horizon);
    let mut path = Vec::with_capacity(config.horizon);
    let summary = simulate_trial(model, prior, config, rule, trial_index, |step| {
        observations.push(step.y);
        path.push(step.state);
    })?;
    Ok(Trajectory {
        nu: summary.nu,
        observations,
        path,
        stop_time: summary.stop_time,
    })
}

/// Maps `f` over trial indices in parallel; results come back in index order.
pub fn run_trials<T, F>(trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..trials).into_par_iter().map(f).collect()
}

pub fn generate_batch<M: ObservationModel + ?Sized>(
    model: &M,
    prior: &GeometricPrior,
    config: &MonteCarloConfig,
    rule: Option<&StoppingRule>,
) -> Result<Vec<Trajectory>> {
    config.validate()?;
    run_trials(config.trials, |i| generate_trajectory(model, prior, config, rule, i))
}

/// One row of a terminal-posterior sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub m: f64,
    pub mean_terminal_posterior: f64,
    pub std_error: f64,
    pub trials: usize,
    pub horizon: usize,
    pub rho: f64,
    pub seed: u64,
}

/// `m = 0.10, 0.15, …, 0.60`.
pub fn default_m_grid() -> Vec<f64> {
    m_grid(0.10, 0.60, 0.05).expect("static grid is valid")
}

/// Inclusive arithmetic grid, rounded to 10 decimals so `0.1 + 0.05` prints as `0.15`.
pub fn m_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    crate::error::check_positive("m_step", step)?;
    crate::error::check_positive("m_start", start)?;
    if !(stop.is_finite() && stop >= start) {
        return Err(Error::InvalidParameter {
            name: "m_stop",
            value: stop,
            domain: "a finite real number >= m_start",
        });
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| ((start + i as f64 * step) * 1e10).round() / 1e10)
        .collect())
}

/// `X̂¹_horizon` of every trial, in trial order.
pub fn terminal_posteriors<M: ObservationModel + ?Sized>(
    model: &M,
    prior: &GeometricPrior,
    config: &MonteCarloConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    run_trials(config.trials, |i| {
        simulate_trial(model, prior, config, None, i, |_| {}).map(|s| s.terminal.x1)
    })
}

/// Mean of `X̂¹_horizon` over no-change trials for each shift in `m_grid`.
pub fn mean_terminal_posterior<M, F>(
    m_grid: &[f64],
    family: F,
    prior: &GeometricPrior,
    config: &MonteCarloConfig,
) -> Result<Vec<SweepRow>>
where
    M: ObservationModel,
    F: Fn(f64) -> Result<M>,
{
    if config.change_mode != ChangeMode::NoChange {
        return Err(Error::Unsupported(
            "terminal-posterior sweeps run on no-change data; set change_mode to no_change".into(),
        ));
    }
    m_grid
        .iter()
        .map(|&m| {
            let model = family(m)?;
            let terminals = terminal_posteriors(&model, prior, config)?;
            Ok(sweep_row(m, &terminals, prior, config))
        })
        .collect()
}

pub(crate) fn sweep_row(m: f64, terminals: &[f64], prior: &GeometricPrior, config: &MonteCarloConfig) -> SweepRow {
    let stats: RunningStats = terminals.iter().copied().collect();
    SweepRow {
        m,
        mean_terminal_posterior: stats.mean(),
        std_error: stats.std_error(),
        trials: config.trials,
        horizon: config.horizon,
        rho: prior.rho(),
        seed: config.seed,
    }
}

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "m,mean_terminal_posterior,std_error,trials,horizon,rho,seed")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.m,
            fmt_full(row.mean_terminal_posterior),
            fmt_full(row.std_error),
            row.trials,
            row.horizon,
            row.rho,
            row.seed
        )?;
    }
    Ok(())
}
