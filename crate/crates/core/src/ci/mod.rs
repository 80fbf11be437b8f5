//! Confidence intervals for partition-specific coefficients.
//!
//! Three constructions are provided: plain Wald intervals, the parametric
//! bootstrap percentile intervals that repeat the whole tree search on every
//! replicate, and Wald intervals at a bootstrap-calibrated level.

mod calibration;
mod percentile;
mod target;
mod wald;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Result, TsvcError};

pub use calibration::{
    bootstrap_calibrated_cis, calibration_alphas, interpolate_adjusted_alpha, CalibratedCis,
    CalibrationBootstrap,
};
pub use percentile::{
    bootstrap_estimate, parametric_percentile_cis, percentile_interval, sample_parametric,
    BootstrapRun,
};
pub use target::best_approximating_coefficients;
pub use wald::{wald_ci, wald_interval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Wald,
    ParametricPercentile,
    BootstrapCalibrated,
}

impl CiMethod {
    pub const ALL: [CiMethod; 3] = [
        CiMethod::Wald,
        CiMethod::ParametricPercentile,
        CiMethod::BootstrapCalibrated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CiMethod::Wald => "wald",
            CiMethod::ParametricPercentile => "parametric_percentile",
            CiMethod::BootstrapCalibrated => "bootstrap_calibrated",
        }
    }
}

impl fmt::Display for CiMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CiMethod {
    type Err = TsvcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wald" => Ok(CiMethod::Wald),
            "parametric_percentile" | "percentile" | "parametric" => {
                Ok(CiMethod::ParametricPercentile)
            }
            "bootstrap_calibrated" | "calibrated" | "calibration" => {
                Ok(CiMethod::BootstrapCalibrated)
            }
            other => Err(TsvcError::Config(format!("unknown CI method {other:?}"))),
        }
    }
}

/// Interval for coefficient `partition` of covariate `covariate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientCi {
    pub covariate: usize,
    pub partition: usize,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: CiMethod,
}

impl CoefficientCi {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

pub(crate) fn check_level(level: f64) -> Result<f64> {
    if level.is_finite() && level > 0.0 && level < 1.0 {
        Ok(1.0 - level)
    } else {
        Err(TsvcError::Config(format!(
            "confidence level {level} must lie in (0, 1)"
        )))
    }
}

/// Standard normal quantile.
pub fn normal_quantile(q: f64) -> f64 {
    Normal::standard().inverse_cdf(q)
}
