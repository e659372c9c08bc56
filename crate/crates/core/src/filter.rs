//! Shiryaev's no-change posterior as a scalar two-state HMM filter.
//!
//! The change process is a two-state chain with transition matrix
//!
//! ```text
//! A = | 1-ρ  0 |
//!     |  ρ   1 |
//! ```
//!
//! and the no-change posterior obeys `X̂¹_k = N_k (1-ρ) b¹(y_k) X̂¹_{k-1}` with
//! `N_k⁻¹ = b²(y_k) + (1-ρ)(b¹(y_k) - b²(y_k)) X̂¹_{k-1}`, starting from
//! `X̂¹_0 = 1`. Writing `M_k = N_k (1-ρ) b¹(y_k)` gives the additive form
//! `log X̂¹_k = log M_k + log X̂¹_{k-1}`, which the state tracks alongside the
//! linear value.

use std::io::Write;

use serde::Serialize;

use crate::error::{check_open_unit, Error, Result};
use crate::observation::{GeometricPrior, ObservationModel, Regime};
use crate::stats::log_sum_exp;

/// Below this the linear posterior reports `0` and `log_x1` carries the statistic.
pub const LINEAR_FLOOR: f64 = 1e-300;

/// Largest excursion outside `[0, 1]` that is treated as rounding.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

/// Default observation cap for [`brute_force_posterior`].
pub const ORACLE_CAP: usize = 25;

/// Posterior after `k` observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterState {
    pub k: u64,
    /// `X̂¹_k`, or `0` once it falls below [`LINEAR_FLOOR`].
    pub x1: f64,
    /// `Σ_{j≤k} log M_j`.
    pub log_x1: f64,
    /// `log M_k` of the latest step; `None` at `k = 0`.
    pub last_log_m: Option<f64>,
}

impl FilterState {
    /// `X̂¹_0 = 1`.
    pub fn init() -> Self {
        Self {
            k: 0,
            x1: 1.0,
            log_x1: 0.0,
            last_log_m: None,
        }
    }

    /// A state at step `k` holding posterior `x1`. `x1 = 0` is absorbing.
    pub fn with_posterior(k: u64, x1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x1) {
            return Err(Error::InvalidParameter {
                name: "x1",
                value: x1,
                domain: "a probability in [0, 1]",
            });
        }
        Ok(Self {
            k,
            x1: if x1 < LINEAR_FLOOR { 0.0 } else { x1 },
            log_x1: x1.ln(),
            last_log_m: None,
        })
    }

    /// `X̂²_k = 1 - X̂¹_k`.
    pub fn change_posterior(&self) -> f64 {
        1.0 - self.x1
    }

    /// Absorbs one observation.
    pub fn step<M: ObservationModel + ?Sized>(
        &self,
        y: f64,
        model: &M,
        prior: &GeometricPrior,
    ) -> Result<Self> {
        let log_pre = model.log_density(Regime::Pre, y);
        let log_post = model.log_density(Regime::Post, y);
        let keep = 1.0 - prior.rho();

        // Common scale factor; it cancels between N_k and b¹.
        let shift = log_pre.max(log_post);
        if !shift.is_finite() {
            return Err(Error::NonPositiveNormalizer { value: shift.exp() });
        }
        let pre = (log_pre - shift).exp();
        let post = (log_post - shift).exp();

        let prev = if self.x1 >= LINEAR_FLOOR {
            self.x1
        } else {
            self.log_x1.exp()
        };
        let inv_normalizer = post + keep * (pre - post) * prev;
        if inv_normalizer.is_nan() || inv_normalizer <= 0.0 {
            return Err(Error::NonPositiveNormalizer {
                value: inv_normalizer,
            });
        }

        let log_m = prior.log_survival() + (log_pre - shift) - inv_normalizer.ln();
        let log_x1 = self.log_x1 + log_m;

        let x1 = if self.x1 >= LINEAR_FLOOR {
            keep * pre * prev / inv_normalizer
        } else {
            log_x1.exp()
        };
        let x1 = clamp_probability(x1)?;

        Ok(Self {
            k: self.k + 1,
            x1: if x1 < LINEAR_FLOOR { 0.0 } else { x1 },
            log_x1,
            last_log_m: Some(log_m),
        })
    }
}

impl Default for FilterState {
    fn default() -> Self {
        Self::init()
    }
}

fn clamp_probability(x: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else if x > 1.0 && x - 1.0 < CLAMP_TOLERANCE {
        Ok(1.0)
    } else if x < 0.0 && x > -CLAMP_TOLERANCE {
        Ok(0.0)
    } else {
        Err(Error::PosteriorOutOfRange { value: x })
    }
}

/// Stop at the first `k >= 1` with `X̂¹_k < 1 - h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoppingRule {
    h: f64,
}

impl StoppingRule {
    pub fn new(h: f64) -> Result<Self> {
        Ok(Self {
            h: check_open_unit("h", h)?,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// The alarm level `1 - h` for `X̂¹`.
    pub fn threshold(&self) -> f64 {
        1.0 - self.h
    }

    pub fn stopped(&self, state: &FilterState) -> bool {
        state.k >= 1 && state.x1 < self.threshold()
    }

    /// First stopping step along a posterior path.
    pub fn first_stop<'a, I>(&self, path: I) -> Option<u64>
    where
        I: IntoIterator<Item = &'a FilterState>,
    {
        path.into_iter().find(|s| self.stopped(s)).map(|s| s.k)
    }
}

/// Posterior path over a sequence and the first stop, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRun {
    /// One state per observation (`k = 1..=n`).
    pub path: Vec<FilterState>,
    pub stop_time: Option<u64>,
}

impl FilterRun {
    pub fn terminal(&self) -> &FilterState {
        self.path.last().expect("run paths are nonempty")
    }
}

/// Filters a whole sequence from `X̂¹_0 = 1`.
pub fn run<M: ObservationModel + ?Sized>(
    observations: &[f64],
    model: &M,
    prior: &GeometricPrior,
    rule: &StoppingRule,
) -> Result<FilterRun> {
    if observations.is_empty() {
        return Err(Error::EmptyObservations);
    }
    let mut path = Vec::with_capacity(observations.len());
    let mut state = FilterState::init();
    let mut stop_time = None;
    for &y in observations {
        state = state.step(y, model, prior)?;
        if stop_time.is_none() && rule.stopped(&state) {
            stop_time = Some(state.k);
        }
        path.push(state);
    }
    Ok(FilterRun { path, stop_time })
}

/// `P(ν > k | y_{1:k})` by direct enumeration of the change time.
///
/// Sums the joint density over `ν ∈ {1, …, k}` plus the no-change-yet
/// event in the log domain. Quadratic in `k`; capped at [`ORACLE_CAP`].
pub fn brute_force_posterior<M: ObservationModel + ?Sized>(
    observations: &[f64],
    model: &M,
    prior: &GeometricPrior,
) -> Result<f64> {
    brute_force_posterior_with_cap(observations, model, prior, ORACLE_CAP)
}

pub fn brute_force_posterior_with_cap<M: ObservationModel + ?Sized>(
    observations: &[f64],
    model: &M,
    prior: &GeometricPrior,
    cap: usize,
) -> Result<f64> {
    let k = observations.len();
    if k == 0 || k > cap {
        return Err(Error::OracleCapExceeded { len: k, cap });
    }
    let log_pre: Vec<f64> = observations
        .iter()
        .map(|&y| model.log_density(Regime::Pre, y))
        .collect();
    let log_post: Vec<f64> = observations
        .iter()
        .map(|&y| model.log_density(Regime::Post, y))
        .collect();

    // ν > k
    let no_change = k as f64 * prior.log_survival() + log_pre.iter().sum::<f64>();

    let mut joint = Vec::with_capacity(k + 1);
    joint.push(no_change);
    for nu in 1..=k {
        let before: f64 = log_pre[..nu - 1].iter().sum();
        let after: f64 = log_post[nu - 1..].iter().sum();
        joint.push(prior.log_mass(nu as u64) + before + after);
    }
    Ok((no_change - log_sum_exp(&joint)).exp())
}

/// Formats a float with 17 significant digits.
pub(crate) fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `k,y,x1,log_x1,log_m` rows for a posterior path.
pub fn write_path_csv<W: Write>(
    mut out: W,
    observations: &[f64],
    path: &[FilterState],
) -> std::io::Result<()> {
    writeln!(out, "k,y,x1,log_x1,log_m")?;
    for (y, state) in observations.iter().zip(path) {
        writeln!(
            out,
            "{},{},{},{},{}",
            state.k,
            fmt_full(*y),
            fmt_full(state.x1),
            fmt_full(state.log_x1),
            fmt_full(state.last_log_m.unwrap_or(f64::NAN)),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observation::GaussianShiftModel;
    use approx::assert_relative_eq;

    fn gauss(m: f64) -> GaussianShiftModel {
        GaussianShiftModel::new(m).unwrap()
    }

    fn prior(rho: f64) -> GeometricPrior {
        GeometricPrior::new(rho).unwrap()
    }

    #[test]
    fn init_state() {
        let s = FilterState::init();
        assert_eq!((s.k, s.x1, s.log_x1, s.last_log_m), (0, 1.0, 0.0, None));
        assert_eq!(FilterState::init(), FilterState::init());
        for h in [0.01, 0.5, 0.999_999] {
            assert!(!StoppingRule::new(h).unwrap().stopped(&s));
        }
    }

    #[test]
    fn degenerate_model_single_step() {
        let p = prior(0.05);
        for y in [-3.0, 0.0, 1.7] {
            let s = FilterState::init().step(y, &gauss(0.0), &p).unwrap();
            assert_eq!(s.x1, 0.95);
            assert_relative_eq!(s.last_log_m.unwrap(), 0.95f64.ln(), max_relative = 1e-15);
        }
    }

    #[test]
    fn one_step_hand_value() {
        // b¹(0) = 1/√(2π), b²(0) = e^{-0.08}/√(2π):
        // X̂¹_1 = 0.95 / (e^{-0.08} + 0.95 (1 - e^{-0.08}))
        let expected = 0.95 / ((-0.08f64).exp() + 0.95 * (1.0 - (-0.08f64).exp()));
        let s = FilterState::init().step(0.0, &gauss(0.4), &prior(0.05)).unwrap();
        assert_relative_eq!(s.x1, expected, max_relative = 1e-14);
        assert!((s.x1 - 0.953_67).abs() < 5e-6);
        let oracle = brute_force_posterior(&[0.0], &gauss(0.4), &prior(0.05)).unwrap();
        assert_relative_eq!(s.x1, oracle, max_relative = 1e-14);
    }

    #[test]
    fn zero_is_absorbing() {
        let zero = FilterState::with_posterior(3, 0.0).unwrap();
        for y in [-40.0, 0.0, 0.4, 40.0] {
            let s = zero.step(y, &gauss(0.4), &prior(0.05)).unwrap();
            assert_eq!(s.x1, 0.0);
            assert_eq!(s.log_x1, f64::NEG_INFINITY);
            assert_eq!(s.k, 4);
        }
    }

    #[test]
    fn extreme_observations_stay_in_bounds() {
        let p = prior(0.2);
        let mut s = FilterState::init();
        for y in [40.0, -40.0, 40.0, 40.0, -40.0, 0.0] {
            s = s.step(y, &gauss(0.6), &p).unwrap();
            assert!((0.0..=1.0).contains(&s.x1), "{s:?}");
        }
    }

    #[test]
    fn deterministic_rule_stops_at_59() {
        let obs = vec![0.3; 100];
        let run = run(&obs, &gauss(0.0), &prior(0.05), &StoppingRule::new(0.95).unwrap()).unwrap();
        assert_eq!(run.stop_time, Some(59));
        assert_eq!(run.path.len(), 100);
        for s in &run.path {
            assert_relative_eq!(s.x1, 0.95f64.powi(s.k as i32), max_relative = 1e-12);
        }
    }

    #[test]
    fn threshold_extremes() {
        // 1 - h close to 1: any first observation crosses
        let eager = StoppingRule::new(1e-12).unwrap();
        let run_eager = run(&[0.1, 0.2], &gauss(0.4), &prior(0.05), &eager).unwrap();
        assert_eq!(run_eager.stop_time, Some(1));
        // 1 - h close to 0: nothing crosses in a short sequence
        let patient = StoppingRule::new(1.0 - 1e-12).unwrap();
        let run_patient = run(&[0.1, 0.2, 5.0], &gauss(0.4), &prior(0.05), &patient).unwrap();
        assert_eq!(run_patient.stop_time, None);
    }

    #[test]
    fn run_rejects_empty() {
        let rule = StoppingRule::new(0.9).unwrap();
        assert_eq!(run(&[], &gauss(0.4), &prior(0.05), &rule), Err(Error::EmptyObservations));
    }

    #[test]
    fn oracle_rejects_out_of_range_lengths() {
        let obs = vec![0.0; 26];
        assert!(matches!(
            brute_force_posterior(&obs, &gauss(0.4), &prior(0.05)),
            Err(Error::OracleCapExceeded { len: 26, cap: 25 })
        ));
        assert!(brute_force_posterior(&[], &gauss(0.4), &prior(0.05)).is_err());
        assert!(brute_force_posterior_with_cap(&obs, &gauss(0.4), &prior(0.05), 30).is_ok());
    }

    #[test]
    fn oracle_degenerate_is_geometric() {
        let obs: Vec<f64> = (0..12).map(|i| (i as f64).cos()).collect();
        for k in 1..=obs.len() {
            let x = brute_force_posterior(&obs[..k], &gauss(0.0), &prior(0.05)).unwrap();
            assert_relative_eq!(x, 0.95f64.powi(k as i32), max_relative = 1e-12);
        }
    }

    #[test]
    fn stopping_rule_validation() {
        for bad in [0.0, 1.0, -1.0, f64::NAN] {
            assert!(StoppingRule::new(bad).is_err());
        }
    }

    #[test]
    fn with_posterior_validation() {
        assert!(FilterState::with_posterior(0, 1.5).is_err());
        let tiny = FilterState::with_posterior(0, 1e-310).unwrap();
        assert_eq!(tiny.x1, 0.0);
        assert!(tiny.log_x1 > -714.0 && tiny.log_x1 < -713.0);
    }

    #[test]
    fn csv_rows() {
        let obs = [0.0, 1.0];
        let run = run(&obs, &gauss(0.4), &prior(0.05), &StoppingRule::new(0.9).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_path_csv(&mut buf, &obs, &run.path).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,y,x1,log_x1,log_m");
        assert_eq!(lines.len(), 3);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields[0], "1");
        assert_eq!(fields[2].parse::<f64>().unwrap(), run.path[0].x1);
    }
}
