//! Detection metrics and empirical super-martingale diagnostics.
//!
//! The drift of the test statistic is estimated by binning steps on the
//! previous posterior `X̂¹_{n}` (log-spaced bins) and averaging the log
//! increment `log M_{n+1} = log X̂¹_{n+1} - log X̂¹_n` in each bin. Under
//! no-change data the small-posterior bins converge to `log(1-ρ) + D(b¹‖b²)`.

use std::f64::consts::LN_10;
use std::io::Write;

use serde::Serialize;

use crate::error::{check_nonnegative, Error, Result};
use crate::filter::{fmt_full, FilterState, StoppingRule};
use crate::observation::{GeometricPrior, ObservationModel};
use crate::simulator::{run_trials, simulate_trial, sweep_row, ChangeMode, MonteCarloConfig, StepRecord, SweepRow, Trajectory};
use crate::stats::RunningStats;

// ---------------------------------------------------------------------------
// Drift
// ---------------------------------------------------------------------------

/// Log-spaced bins on `X̂¹`: `per_decade` bins per decade from 1 down to
/// `10^-decades`, plus one floor bin `[0, 10^-decades)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DriftBinning {
    pub per_decade: u32,
    pub decades: u32,
    /// Bins with fewer steps are flagged unreliable.
    pub min_count: u64,
}

impl Default for DriftBinning {
    fn default() -> Self {
        Self {
            per_decade: 12,
            decades: 6,
            min_count: 100,
        }
    }
}

impl DriftBinning {
    pub fn validate(&self) -> Result<()> {
        if self.per_decade == 0 || self.decades == 0 {
            return Err(Error::InvalidParameter {
                name: if self.per_decade == 0 { "per_decade" } else { "decades" },
                value: 0.0,
                domain: "an integer >= 1",
            });
        }
        Ok(())
    }

    /// Number of bins including the floor bin.
    pub fn len(&self) -> usize {
        self.grid_bins() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn grid_bins(&self) -> usize {
        (self.per_decade * self.decades) as usize
    }

    /// Bin holding a posterior with logarithm `log_x1`; `None` for an exact zero.
    pub fn index(&self, log_x1: f64) -> Option<usize> {
        if log_x1 == f64::NEG_INFINITY || log_x1.is_nan() {
            return None;
        }
        let depth = (-log_x1 / LN_10 * self.per_decade as f64).max(0.0);
        Some((depth.floor() as usize).min(self.grid_bins()))
    }

    /// `[low, high)` edges of bin `i`.
    pub fn edges(&self, i: usize) -> (f64, f64) {
        let pd = self.per_decade as f64;
        if i >= self.grid_bins() {
            (0.0, 10f64.powf(-(self.decades as f64)))
        } else {
            (10f64.powf(-((i + 1) as f64) / pd), 10f64.powf(-(i as f64) / pd))
        }
    }
}

/// Which steps enter the drift estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftConditioning {
    /// Only observations drawn before the change.
    PreChange,
    /// Every step, pre- and post-change.
    AllSteps,
}

/// Empirical `E[log X̂¹_{n+1} - log X̂¹_n | X̂¹_n ∈ bin]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftEstimate {
    pub bin_low: f64,
    pub bin_high: f64,
    /// NaN for an empty bin.
    pub mean_increment: f64,
    pub std_error: f64,
    pub count: u64,
    #[serde(skip)]
    pub reliable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftAccumulator {
    binning: DriftBinning,
    conditioning: DriftConditioning,
    cells: Vec<RunningStats>,
}

impl DriftAccumulator {
    pub fn new(binning: DriftBinning, conditioning: DriftConditioning) -> Self {
        Self {
            binning,
            conditioning,
            cells: vec![RunningStats::new(); binning.len()],
        }
    }

    /// Records one increment `log_m` taken from a posterior with logarithm `prev_log_x1`.
    pub fn observe(&mut self, prev_log_x1: f64, log_m: f64) {
        if !log_m.is_finite() {
            return;
        }
        if let Some(i) = self.binning.index(prev_log_x1) {
            self.cells[i].push(log_m);
        }
    }

    pub fn observe_transition(&mut self, prev: &FilterState, next: &FilterState, pre_change: bool) {
        if self.conditioning == DriftConditioning::PreChange && !pre_change {
            return;
        }
        if let Some(log_m) = next.last_log_m {
            self.observe(prev.log_x1, log_m);
        }
    }

    pub fn observe_step(&mut self, step: &StepRecord) {
        self.observe_transition(&step.prev, &step.state, step.pre_change);
    }

    pub fn merge(&mut self, other: &DriftAccumulator) {
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            a.merge(b);
        }
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().map(RunningStats::count).sum()
    }

    /// Bins from `X̂¹ ≈ 1` downwards, ending with the floor bin.
    pub fn estimates(&self) -> Vec<DriftEstimate> {
        self.cells
            .iter()
            .enumerate()
            .map(|(i, cell)| {
                let (bin_low, bin_high) = self.binning.edges(i);
                DriftEstimate {
                    bin_low,
                    bin_high,
                    mean_increment: cell.mean(),
                    std_error: cell.std_error(),
                    count: cell.count(),
                    reliable: cell.count() >= self.binning.min_count,
                }
            })
            .collect()
    }
}

/// Binned drift of `log X̂¹` over a batch of trajectories.
///
/// Bins below `min_count` are returned with `reliable = false`; a batch
/// without any usable step is an error.
pub fn estimate_drift(
    trajectories: &[Trajectory],
    binning: DriftBinning,
    conditioning: DriftConditioning,
) -> Result<Vec<DriftEstimate>> {
    binning.validate()?;
    let mut acc = DriftAccumulator::new(binning, conditioning);
    for t in trajectories {
        let pre_len = t.pre_change_len();
        for (i, (prev, next)) in t.transitions().enumerate() {
            acc.observe_transition(&prev, &next, i < pre_len);
        }
    }
    if acc.total() == 0 {
        return Err(Error::NoDriftData);
    }
    Ok(acc.estimates())
}

/// The reliable bin closest to `X̂¹ = 0`.
pub fn smallest_reliable_bin(estimates: &[DriftEstimate]) -> Option<&DriftEstimate> {
    estimates.iter().rev().find(|e| e.reliable)
}

/// Empirical trap level: starting at the smallest reliable bin and moving up,
/// the upper edge of the last bin in the unbroken run of reliable bins whose
/// mean increment is below `-z` standard errors. `None` when the smallest
/// reliable bin is not significantly negative.
pub fn empirical_trap_level(estimates: &[DriftEstimate], z: f64) -> Option<f64> {
    let significant = |e: &DriftEstimate| e.mean_increment + z * e.std_error < 0.0;
    let start = estimates.iter().rposition(|e| e.reliable)?;
    if !significant(&estimates[start]) {
        return None;
    }
    let mut level = estimates[start].bin_high;
    for e in estimates[..start].iter().rev() {
        if !e.reliable {
            continue;
        }
        if !significant(e) {
            break;
        }
        level = e.bin_high;
    }
    Some(level)
}

pub fn write_drift_csv<W: Write>(mut out: W, estimates: &[DriftEstimate]) -> std::io::Result<()> {
    writeln!(out, "bin_low,bin_high,mean_increment,std_error,count")?;
    for e in estimates {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_full(e.bin_low),
            fmt_full(e.bin_high),
            fmt_full(e.mean_increment),
            fmt_full(e.std_error),
            e.count
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Trap entry and escape
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrapStatistics {
    pub trials: usize,
    pub entered: usize,
    pub escaped: usize,
    /// `entered / trials`.
    pub entry_fraction: f64,
    /// `escaped / entered`, and `0` when nothing entered.
    pub escape_fraction: f64,
}

/// Follows one pre-change path: did it drop below `entry`, and later rise above `escape`?
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapTracker {
    log_entry: f64,
    log_escape: f64,
    pub entered: bool,
    pub escaped: bool,
}

impl TrapTracker {
    pub fn new(entry_level: f64, escape_level: f64) -> Result<Self> {
        check_trap_levels(entry_level, escape_level)?;
        Ok(Self {
            log_entry: entry_level.ln(),
            log_escape: escape_level.ln(),
            entered: false,
            escaped: false,
        })
    }

    pub fn observe(&mut self, log_x1: f64) {
        if !self.entered {
            self.entered = log_x1 < self.log_entry;
        } else if log_x1 > self.log_escape {
            self.escaped = true;
        }
    }
}

fn check_trap_levels(entry: f64, escape: f64) -> Result<()> {
    if entry > 0.0 && entry < escape && escape <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidTrapLevels { entry, escape })
    }
}

fn summarize_traps(trackers: impl IntoIterator<Item = TrapTracker>) -> TrapStatistics {
    let (mut trials, mut entered, mut escaped) = (0, 0, 0);
    for t in trackers {
        trials += 1;
        entered += t.entered as usize;
        escaped += t.escaped as usize;
    }
    TrapStatistics {
        trials,
        entered,
        escaped,
        entry_fraction: if trials == 0 { 0.0 } else { entered as f64 / trials as f64 },
        escape_fraction: if entered == 0 { 0.0 } else { escaped as f64 / entered as f64 },
    }
}

/// Entry and escape-after-entry frequencies over the pre-change parts of `trajectories`.
pub fn trap_statistics(
    trajectories: &[Trajectory],
    entry_level: f64,
    escape_level: f64,
) -> Result<TrapStatistics> {
    let template = TrapTracker::new(entry_level, escape_level)?;
    Ok(summarize_traps(trajectories.iter().map(|t| {
        let mut tracker = template;
        for s in &t.path[..t.pre_change_len()] {
            tracker.observe(s.log_x1);
        }
        tracker
    })))
}

// ---------------------------------------------------------------------------
// Detection metrics
// ---------------------------------------------------------------------------

/// Average detection delay, false-alarm frequency and the cost `c·ADD + PFA`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionMetrics {
    /// Mean of `(τ-ν)⁺` over trials that stopped within the horizon.
    pub add: f64,
    /// Fraction of trials with `τ < ν`.
    pub pfa: f64,
    pub cost: f64,
    pub c: f64,
    /// Trials that never stopped within the horizon.
    pub censored: usize,
    #[serde(skip)]
    pub trials: usize,
}

impl DetectionMetrics {
    pub fn censoring_warning(&self) -> Option<String> {
        (self.censored > 0).then(|| {
            format!(
                "warning: {} of {} trajectories never stopped within the horizon; ADD excludes them and is biased low",
                self.censored, self.trials
            )
        })
    }
}

/// Metrics for trajectories generated with a change time (`P_π` or fixed `ν`).
///
/// A trajectory that never stops counts as `τ = horizon + 1` for the false
/// alarm test and is left out of the delay average.
pub fn detection_metrics(
    trajectories: &[Trajectory],
    rule: &StoppingRule,
    c: f64,
) -> Result<DetectionMetrics> {
    let c = check_nonnegative("c", c)?;
    let mut outcomes = Vec::with_capacity(trajectories.len());
    for t in trajectories {
        let nu = t.nu.ok_or_else(|| {
            Error::Unsupported("detection metrics need trajectories with a change time".into())
        })?;
        outcomes.push((nu, rule.first_stop(&t.path), t.observations.len() as u64));
    }
    Ok(metrics_from_outcomes(&outcomes, c))
}

fn metrics_from_outcomes(outcomes: &[(u64, Option<u64>, u64)], c: f64) -> DetectionMetrics {
    let mut delay = RunningStats::new();
    let mut false_alarms = 0usize;
    let mut censored = 0usize;
    for &(nu, tau, horizon) in outcomes {
        let tau = match tau {
            Some(tau) => {
                delay.push(tau.saturating_sub(nu) as f64);
                tau
            }
            None => {
                censored += 1;
                horizon + 1
            }
        };
        false_alarms += (tau < nu) as usize;
    }
    let trials = outcomes.len();
    let add = if delay.count() == 0 { 0.0 } else { delay.mean() };
    let pfa = if trials == 0 { 0.0 } else { false_alarms as f64 / trials as f64 };
    DetectionMetrics {
        add,
        pfa,
        cost: c * add + pfa,
        c,
        censored,
        trials,
    }
}

/// Runs `config.trials` change-point trials and computes their detection metrics
/// without storing paths.
pub fn simulate_detection_metrics<M: ObservationModel + ?Sized>(
    model: &M,
    prior: &GeometricPrior,
    config: &MonteCarloConfig,
    rule: &StoppingRule,
    c: f64,
) -> Result<DetectionMetrics> {
    let c = check_nonnegative("c", c)?;
    config.validate()?;
    if config.change_mode == ChangeMode::NoChange {
        return Err(Error::Unsupported(
            "detection metrics need a change time; use sample_from_prior or fixed_nu".into(),
        ));
    }
    let outcomes = run_trials(config.trials, |i| {
        let s = simulate_trial(model, prior, config, Some(rule), i, |_| {})?;
        Ok((s.nu.expect("change mode draws a change time"), s.stop_time, config.horizon as u64))
    })?;
    Ok(metrics_from_outcomes(&outcomes, c))
}

// ---------------------------------------------------------------------------
// Combined no-change study
// ---------------------------------------------------------------------------

/// Terminal posterior, drift table and trap statistics from one pass over
/// no-change trials.
#[derive(Debug, Clone, PartialEq)]
pub struct NoChangeStudy {
    pub sweep: SweepRow,
    pub drift: Vec<DriftEstimate>,
    pub trap: TrapStatistics,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyOptions {
    pub binning: DriftBinning,
    pub entry_level: f64,
    pub escape_level: f64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            binning: DriftBinning::default(),
            entry_level: 1e-3,
            escape_level: 1e-1,
        }
    }
}

pub fn no_change_study<M: ObservationModel + ?Sized>(
    m: f64,
    model: &M,
    prior: &GeometricPrior,
    config: &MonteCarloConfig,
    options: &StudyOptions,
) -> Result<NoChangeStudy> {
    config.validate()?;
    options.binning.validate()?;
    let template = TrapTracker::new(options.entry_level, options.escape_level)?;
    if config.change_mode != ChangeMode::NoChange {
        return Err(Error::Unsupported("no-change studies need change_mode no_change".into()));
    }
    let per_trial = run_trials(config.trials, |i| {
        let mut acc = DriftAccumulator::new(options.binning, DriftConditioning::PreChange);
        let mut tracker = template;
        let summary = simulate_trial(model, prior, config, None, i, |step| {
            acc.observe_step(step);
            tracker.observe(step.state.log_x1);
        })?;
        Ok((summary.terminal.x1, acc, tracker))
    })?;

    let terminals: Vec<f64> = per_trial.iter().map(|(x, _, _)| *x).collect();
    let mut drift = DriftAccumulator::new(options.binning, DriftConditioning::PreChange);
    for (_, acc, _) in &per_trial {
        drift.merge(acc);
    }
    Ok(NoChangeStudy {
        sweep: sweep_row(m, &terminals, prior, config),
        drift: drift.estimates(),
        trap: summarize_traps(per_trial.iter().map(|(_, _, t)| *t)),
    })
}
