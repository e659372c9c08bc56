use thiserror::Error;

/// Errors raised by the filter, the diagnostics and the Monte Carlo harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: must be {domain}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("normalization factor is not positive ({value}); the observation model is corrupted")]
    NonPositiveNormalizer { value: f64 },

    #[error("posterior {value} left [0, 1] beyond rounding tolerance")]
    PosteriorOutOfRange { value: f64 },

    #[error("observation sequence is empty")]
    EmptyObservations,

    #[error("brute-force oracle supports 1..={cap} observations, got {len}")]
    OracleCapExceeded { len: usize, cap: usize },

    #[error(
        "Monte Carlo KL estimate did not converge: standard error {std_error:e} exceeds {tolerance:e} after {samples} samples"
    )]
    KlNotConverged {
        std_error: f64,
        tolerance: f64,
        samples: usize,
    },

    #[error("invalid trap levels: need 0 < entry_level ({entry}) < escape_level ({escape}) <= 1")]
    InvalidTrapLevels { entry: f64, escape: f64 },

    #[error("missing parameter `{name}`: {hint}")]
    MissingParameter {
        name: &'static str,
        hint: &'static str,
    },

    #[error("invalid model spec: {0}")]
    InvalidModelSpec(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("no drift observations were recorded")]
    NoDriftData,

    #[error("i/o failure on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_open_unit(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            domain: "a real number strictly inside (0, 1)",
        })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            domain: "a finite real number > 0",
        })
    }
}

pub(crate) fn check_nonnegative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            domain: "a finite real number >= 0",
        })
    }
}

pub(crate) fn check_count(name: &'static str, value: usize) -> Result<usize> {
    if value >= 1 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value: value as f64,
            domain: "an integer >= 1",
        })
    }
}
