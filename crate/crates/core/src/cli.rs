//! The `shiryaev` command line.
//!
//! Every parameter is validated before any simulation starts, and output
//! files are written only once all of their content exists, so a rejected
//! invocation leaves nothing behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analysis::{
    no_change_study, simulate_detection_metrics, smallest_reliable_bin, write_drift_csv, DriftAccumulator,
    DriftBinning, DriftConditioning, StudyOptions,
};
use crate::error::{Error, Result};
use crate::filter::StoppingRule;
use crate::informativeness::{critical_mean, diagnose_with};
use crate::observation::{GaussianShiftModel, GeometricPrior, KlOptions, ModelSpec};
use crate::simulator::{
    generate_trajectory, m_grid, mean_terminal_posterior, run_trials, simulate_trial, write_sweep_csv, ChangeMode,
    MonteCarloConfig,
};

pub const DEFAULT_SEED: u64 = 2024;

/// Shifts used for the two example trajectories: one below and one above the critical mean.
pub const FIGURE1_SHIFTS: [f64; 2] = [0.23, 0.40];

#[derive(Debug, Parser)]
#[command(name = "shiryaev", version, about = "Shiryaev quickest change detection and informativeness diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Relative entropy vs. prior: are the measurements informative? (JSON)
    Diagnose(DiagnoseArgs),
    /// One seeded trajectory as `k,y,x1,log_x1,log_m` CSV.
    Simulate(SimulateArgs),
    /// Mean terminal posterior over a grid of shifts, no-change data (CSV).
    Sweep(SweepArgs),
    /// Detection delay, false alarm rate and cost under the prior (JSON).
    Metrics(MetricsArgs),
    /// Binned drift of log X̂¹ (CSV).
    Drift(DriftArgs),
    /// Two no-change example trajectories, m = 0.23 and m = 0.40.
    Figure1(Figure1Args),
    /// Mean X̂¹ at the horizon for m = 0.10..0.60, no-change data.
    Figure2(Figure2Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    GaussianShift,
    LaplaceShift,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "gaussian-shift")]
    pub model: ModelKind,
    /// Post-change shift, > 0.
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<f64>,
    /// Model as JSON, e.g. '{"model": "gaussian_shift", "m": 0.23}'. Overrides --model/--m.
    #[arg(long)]
    pub model_spec: Option<String>,
}

impl ModelArgs {
    pub fn spec(&self) -> Result<ModelSpec> {
        if let Some(json) = &self.model_spec {
            return serde_json::from_str(json).map_err(|e| Error::InvalidModelSpec(e.to_string()));
        }
        let m = self.m.ok_or(Error::MissingParameter {
            name: "m",
            hint: "pass --m <shift > 0> or --model-spec <json>",
        })?;
        Ok(match self.model {
            ModelKind::GaussianShift => ModelSpec::GaussianShift { m },
            ModelKind::LaplaceShift => ModelSpec::LaplaceShift { m },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChangeModeArg {
    NoChange,
    Prior,
    Fixed,
}

fn change_mode(mode: ChangeModeArg, nu: Option<u64>) -> Result<ChangeMode> {
    Ok(match mode {
        ChangeModeArg::NoChange => ChangeMode::NoChange,
        ChangeModeArg::Prior => ChangeMode::SampleFromPrior,
        ChangeModeArg::Fixed => ChangeMode::FixedNu(nu.ok_or(Error::MissingParameter {
            name: "nu",
            hint: "--change-mode fixed needs --nu <integer >= 1>",
        })?),
    })
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub rho: f64,
    /// Monte Carlo sample count for models without a closed-form KL.
    #[arg(long, default_value_t = 1_000_000)]
    pub kl_samples: usize,
    /// Fail if the Monte Carlo standard error exceeds this.
    #[arg(long)]
    pub kl_tolerance: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.95, allow_negative_numbers = true)]
    pub h: f64,
    #[arg(long, default_value_t = 5000)]
    pub horizon: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Trial index selecting the random stream.
    #[arg(long, default_value_t = 0)]
    pub trial: usize,
    #[arg(long, value_enum, default_value = "no-change")]
    pub change_mode: ChangeModeArg,
    #[arg(long)]
    pub nu: Option<u64>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value = "gaussian-shift")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub rho: f64,
    /// Explicit comma-separated shifts; overrides the start/stop/step grid.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.10, allow_negative_numbers = true)]
    pub m_start: f64,
    #[arg(long, default_value_t = 0.60, allow_negative_numbers = true)]
    pub m_stop: f64,
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub m_step: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 5000)]
    pub horizon: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.95, allow_negative_numbers = true)]
    pub h: f64,
    /// Delay penalty in the cost c·ADD + PFA.
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    pub c: f64,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    #[arg(long, default_value_t = 2000)]
    pub horizon: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "prior")]
    pub change_mode: ChangeModeArg,
    #[arg(long)]
    pub nu: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConditioningArg {
    PreChange,
    AllSteps,
}

#[derive(Debug, Clone, Args)]
pub struct DriftArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 5000)]
    pub horizon: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "no-change")]
    pub change_mode: ChangeModeArg,
    #[arg(long)]
    pub nu: Option<u64>,
    #[arg(long, value_enum, default_value = "pre-change")]
    pub conditioning: ConditioningArg,
    #[arg(long, default_value_t = 12)]
    pub per_decade: u32,
    #[arg(long, default_value_t = 6)]
    pub decades: u32,
    #[arg(long, default_value_t = 100)]
    pub min_count: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Figure1Args {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 5000)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub rho: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct Figure2Args {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 5000)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long, default_value = "figure2.csv")]
    pub out: PathBuf,
}

/// Runs a parsed command, writing primary output to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Diagnose(args) => cmd_diagnose(args, stdout),
        Command::Simulate(args) => cmd_simulate(args, stdout),
        Command::Sweep(args) => cmd_sweep(args, stdout),
        Command::Metrics(args) => cmd_metrics(args, stdout),
        Command::Drift(args) => cmd_drift(args, stdout),
        Command::Figure1(args) => cmd_figure1(args, stdout),
        Command::Figure2(args) => cmd_figure2(args, stdout),
    }
}

pub fn cmd_diagnose(args: &DiagnoseArgs, stdout: &mut dyn Write) -> Result<()> {
    let model = args.model.spec()?.build()?;
    let prior = GeometricPrior::new(args.rho)?;
    let options = KlOptions {
        samples: args.kl_samples,
        max_std_error: args.kl_tolerance,
        seed: args.seed,
    };
    let report = diagnose_with(&model, &prior, &options)?;
    let line = serde_json::to_string(&report).expect("report serializes");
    emit(None, format!("{line}\n").as_bytes(), stdout)
}

pub fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let model = args.model.spec()?.build()?;
    let prior = GeometricPrior::new(args.rho)?;
    let rule = StoppingRule::new(args.h)?;
    let config = MonteCarloConfig::new(
        args.trial.saturating_add(1),
        args.horizon,
        args.seed,
        change_mode(args.change_mode, args.nu)?,
    )?;
    let trajectory = generate_trajectory(&model, &prior, &config, Some(&rule), args.trial)?;
    let mut csv = Vec::new();
    trajectory.write_csv(&mut csv).expect("in-memory write");
    emit(args.out.as_deref(), &csv, stdout)?;
    if let Some(path) = &args.out {
        let terminal = trajectory.terminal().expect("horizon >= 1");
        let summary = json!({
            "out": path.display().to_string(),
            "nu": trajectory.nu,
            "stop_time": trajectory.stop_time,
            "terminal_x1": terminal.x1,
            "terminal_log_x1": terminal.log_x1,
        });
        writeln!(stdout, "{summary}").map_err(|e| io_error("stdout", e))?;
    }
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> Result<()> {
    let prior = GeometricPrior::new(args.rho)?;
    let grid = match &args.grid {
        Some(grid) if !grid.is_empty() => grid.clone(),
        _ => m_grid(args.m_start, args.m_stop, args.m_step)?,
    };
    let specs: Vec<ModelSpec> = grid
        .iter()
        .map(|&m| match args.model {
            ModelKind::GaussianShift => ModelSpec::GaussianShift { m },
            ModelKind::LaplaceShift => ModelSpec::LaplaceShift { m },
        })
        .collect();
    for spec in &specs {
        spec.build()?;
    }
    let config = MonteCarloConfig::new(args.trials, args.horizon, args.seed, ChangeMode::NoChange)?;
    let family = |m: f64| match args.model {
        ModelKind::GaussianShift => ModelSpec::GaussianShift { m }.build(),
        ModelKind::LaplaceShift => ModelSpec::LaplaceShift { m }.build(),
    };
    let rows = mean_terminal_posterior(&grid, family, &prior, &config)?;
    let mut csv = Vec::new();
    write_sweep_csv(&mut csv, &rows).expect("in-memory write");
    emit(args.out.as_deref(), &csv, stdout)
}

pub fn cmd_metrics(args: &MetricsArgs, stdout: &mut dyn Write) -> Result<()> {
    let model = args.model.spec()?.build()?;
    let prior = GeometricPrior::new(args.rho)?;
    let rule = StoppingRule::new(args.h)?;
    let mode = change_mode(args.change_mode, args.nu)?;
    if mode == ChangeMode::NoChange {
        return Err(Error::InvalidParameter {
            name: "change_mode",
            value: f64::NAN,
            domain: "prior or fixed (metrics need a change time)",
        });
    }
    let config = MonteCarloConfig::new(args.trials, args.horizon, args.seed, mode)?.with_stop_at_alarm(true);
    let metrics = simulate_detection_metrics(&model, &prior, &config, &rule, args.c)?;
    if let Some(warning) = metrics.censoring_warning() {
        eprintln!("{warning}");
    }
    let line = serde_json::to_string(&metrics).expect("metrics serialize");
    emit(None, format!("{line}\n").as_bytes(), stdout)
}

pub fn cmd_drift(args: &DriftArgs, stdout: &mut dyn Write) -> Result<()> {
    let model = args.model.spec()?.build()?;
    let prior = GeometricPrior::new(args.rho)?;
    let config = MonteCarloConfig::new(
        args.trials,
        args.horizon,
        args.seed,
        change_mode(args.change_mode, args.nu)?,
    )?;
    let binning = DriftBinning {
        per_decade: args.per_decade,
        decades: args.decades,
        min_count: args.min_count,
    };
    binning.validate()?;
    let conditioning = match args.conditioning {
        ConditioningArg::PreChange => DriftConditioning::PreChange,
        ConditioningArg::AllSteps => DriftConditioning::AllSteps,
    };
    let estimates = if config.change_mode == ChangeMode::NoChange && conditioning == DriftConditioning::PreChange {
        no_change_study(
            args.model.spec()?.shift(),
            &model,
            &prior,
            &config,
            &StudyOptions {
                binning,
                ..StudyOptions::default()
            },
        )?
        .drift
    } else {
        let per_trial = run_trials(config.trials, |i| {
            let mut acc = DriftAccumulator::new(binning, conditioning);
            simulate_trial(&model, &prior, &config, None, i, |step| acc.observe_step(step))?;
            Ok(acc)
        })?;
        let mut acc = DriftAccumulator::new(binning, conditioning);
        for a in &per_trial {
            acc.merge(a);
        }
        if acc.total() == 0 {
            return Err(Error::NoDriftData);
        }
        acc.estimates()
    };
    if smallest_reliable_bin(&estimates).is_none() {
        eprintln!("warning: no bin reached {} steps; every estimate is unreliable", binning.min_count);
    }
    let mut csv = Vec::new();
    write_drift_csv(&mut csv, &estimates).expect("in-memory write");
    emit(args.out.as_deref(), &csv, stdout)
}

pub fn cmd_figure1(args: &Figure1Args, stdout: &mut dyn Write) -> Result<()> {
    let prior = GeometricPrior::new(args.rho)?;
    let config = MonteCarloConfig::new(1, args.horizon, args.seed, ChangeMode::NoChange)?;
    let mut outputs = Vec::new();
    for m in FIGURE1_SHIFTS {
        let model = GaussianShiftModel::new(m)?;
        let trajectory = generate_trajectory(&model, &prior, &config, None, 0)?;
        let mut csv = Vec::new();
        trajectory.write_csv(&mut csv).expect("in-memory write");
        let path = args.out.join(figure1_file_name(m));
        let terminal = trajectory.terminal().expect("horizon >= 1").x1;
        outputs.push((m, path, csv, terminal));
    }
    for (_, path, csv, _) in &outputs {
        emit(Some(path), csv, stdout)?;
    }
    let files: Vec<_> = outputs
        .iter()
        .map(|(m, path, _, terminal)| json!({"m": m, "out": path.display().to_string(), "terminal_x1": terminal}))
        .collect();
    writeln!(stdout, "{}", json!({ "rho": args.rho, "seed": args.seed, "files": files }))
        .map_err(|e| io_error("stdout", e))
}

pub fn figure1_file_name(m: f64) -> String {
    format!("figure1_m{m:.2}.csv")
}

pub fn cmd_figure2(args: &Figure2Args, stdout: &mut dyn Write) -> Result<()> {
    let prior = GeometricPrior::new(args.rho)?;
    let config = MonteCarloConfig::new(args.trials, args.horizon, args.seed, ChangeMode::NoChange)?;
    let grid = crate::simulator::default_m_grid();
    let rows = mean_terminal_posterior(&grid, GaussianShiftModel::new, &prior, &config)?;
    let mut csv = Vec::new();
    write_sweep_csv(&mut csv, &rows).expect("in-memory write");
    emit(Some(&args.out), &csv, stdout)?;
    writeln!(
        stdout,
        "{}",
        json!({
            "out": args.out.display().to_string(),
            "rows": rows.len(),
            "critical_mean": critical_mean(&prior),
        })
    )
    .map_err(|e| io_error("stdout", e))
}

fn emit(path: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, bytes).map_err(|e| io_error(&path.display().to_string(), e)),
        None => stdout.write_all(bytes).map_err(|e| io_error("stdout", e)),
    }
}

fn io_error(path: &str, err: std::io::Error) -> Error {
    Error::Io {
        path: path.to_string(),
        message: err.to_string(),
    }
}
