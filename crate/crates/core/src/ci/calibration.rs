use rand::Rng;
use rayon::prelude::*;

use super::wald::wald_at;
use super::{check_level, normal_quantile, CiMethod, CoefficientCi};
use crate::config::TsvcConfig;
use crate::data::Dataset;
use crate::engine::{fit_structure, fit_tsvc};
use crate::error::{Result, TsvcError};
use crate::model::TsvcModel;
use crate::rng::{stream, Domain};

/// Smallest level of the calibration grid.
pub const ALPHA_MIN: f64 = 1e-4;
/// Grid spacing used for levels other than 0.05 and 0.10.
const ALPHA_STEP: f64 = 5e-4;

/// Nonparametric bootstrap record for calibrating Wald levels.
///
/// For every successful resample `b` and covariate `j` it keeps, per
/// coefficient of the resample's model `M_b`, the distance between the
/// estimate of `M_b`'s structure refitted on the original data and `M_b`'s
/// own estimate, together with `M_b`'s standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationBootstrap {
    pub replicate_count: usize,
    pub seed: u64,
    /// Resamples whose tree search or original-data refit failed; they are
    /// left out of the coverage rates.
    pub failed_fits: usize,
    /// `deviations[b][j]`: `(|beta_b0 - beta_b|, se_b)` per coefficient.
    pub deviations: Vec<Vec<Vec<(f64, f64)>>>,
}

/// Calibrated Wald intervals with the level used for each covariate.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedCis {
    pub intervals: Vec<CoefficientCi>,
    /// Adjusted `alpha` per covariate; `None` for covariates without
    /// coefficients or without any usable resample.
    pub adjusted_alphas: Vec<Option<f64>>,
}

/// Per covariate and leaf, the Wald interval of one resample.
type ResampleIntervals = Vec<Vec<(f64, f64)>>;

impl CalibrationBootstrap {
    pub fn run(dataset: &Dataset, config: &TsvcConfig, b: usize, seed: u64) -> Result<Self> {
        if b == 0 {
            return Err(TsvcError::Config(
                "bootstrap needs at least one replicate".into(),
            ));
        }
        let n = dataset.n();
        let results: Vec<Option<ResampleIntervals>> = (0..b)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream(seed, Domain::NonparametricResample, r as u64, 0);
                let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let resample = dataset.subset(&rows);
                let boot = fit_tsvc(&resample, config).ok()?;
                let refit = fit_structure(dataset, &boot.structure, config).ok()?;
                Some(
                    boot.coefficients
                        .iter()
                        .zip(&boot.standard_errors)
                        .zip(&refit.coefficients)
                        .map(|((bc, bse), rc)| {
                            bc.iter()
                                .zip(bse)
                                .zip(rc)
                                .map(|((b, s), r)| ((r - b).abs(), *s))
                                .collect()
                        })
                        .collect(),
                )
            })
            .collect();
        let failed_fits = results.iter().filter(|r| r.is_none()).count();
        Ok(Self {
            replicate_count: b,
            seed,
            failed_fits,
            deviations: results.into_iter().flatten().collect(),
        })
    }

    /// `gamma[j][k]`: average share of coefficients whose original-data
    /// refit lies inside the resample's Wald interval at `alphas[k]`.
    pub fn coverage_rates(&self, alphas: &[f64]) -> Vec<Vec<f64>> {
        let p = self.deviations.first().map_or(0, Vec::len);
        let z: Vec<f64> = alphas
            .iter()
            .map(|a| normal_quantile(1.0 - a / 2.0))
            .collect();
        (0..p)
            .map(|j| {
                let mut gamma = vec![0.0; alphas.len()];
                let mut used = 0usize;
                for rep in &self.deviations {
                    let coefs = &rep[j];
                    if coefs.is_empty() {
                        continue;
                    }
                    used += 1;
                    let w = 1.0 / coefs.len() as f64;
                    for (g, zk) in gamma.iter_mut().zip(&z) {
                        let inside = coefs.iter().filter(|(d, s)| *d <= zk * s).count();
                        *g += w * inside as f64;
                    }
                }
                if used > 0 {
                    gamma.iter_mut().for_each(|g| *g /= used as f64);
                } else {
                    gamma.iter_mut().for_each(|g| *g = f64::NAN);
                }
                gamma
            })
            .collect()
    }

    /// Adjusted `alpha` per covariate for nominal `level`.
    pub fn adjusted_alphas(&self, level: f64) -> Result<Vec<Option<f64>>> {
        let alpha = check_level(level)?;
        let grid = calibration_alphas(alpha);
        Ok(self
            .coverage_rates(&grid)
            .iter()
            .map(|gamma| {
                if gamma.iter().any(|g| g.is_nan()) {
                    None
                } else {
                    Some(interpolate_adjusted_alpha(gamma, &grid, alpha))
                }
            })
            .collect())
    }

    /// Wald intervals for `model` at the calibrated levels.
    pub fn calibrated_cis(&self, model: &TsvcModel, level: f64) -> Result<CalibratedCis> {
        let alpha = check_level(level)?;
        let mut adjusted = self.adjusted_alphas(level)?;
        adjusted.resize(model.p(), None);
        for (j, coefs) in model.coefficients.iter().enumerate() {
            if coefs.is_empty() {
                adjusted[j] = None;
            }
        }
        let intervals = wald_at(
            model,
            level,
            |j| adjusted[j].unwrap_or(alpha),
            CiMethod::BootstrapCalibrated,
        );
        Ok(CalibratedCis {
            intervals,
            adjusted_alphas: adjusted,
        })
    }
}

/// Equidistant grid from `ALPHA_MIN` up to `alpha`: 100 points for 0.05,
/// 200 for 0.10 and `ceil(alpha / 0.0005)` otherwise.
pub fn calibration_alphas(alpha: f64) -> Vec<f64> {
    if alpha <= ALPHA_MIN {
        return vec![alpha];
    }
    let k = if (alpha - 0.05).abs() < 1e-12 {
        100
    } else if (alpha - 0.10).abs() < 1e-12 {
        200
    } else {
        let r = alpha / ALPHA_STEP;
        let nearest = r.round();
        let k = if (r - nearest).abs() < 1e-9 {
            nearest
        } else {
            r.ceil()
        };
        (k as usize).max(2)
    };
    let step = (alpha - ALPHA_MIN) / (k - 1) as f64;
    let mut grid: Vec<f64> = (0..k).map(|i| ALPHA_MIN + i as f64 * step).collect();
    grid[k - 1] = alpha;
    grid
}

/// Linear interpolation of the level at which coverage crosses `1 - alpha`.
///
/// `gamma[k]` is the coverage at `grid[k]`. If coverage never drops below
/// `1 - alpha` no adjustment is made; if it is already below at the first
/// grid point the smallest grid level is used.
pub fn interpolate_adjusted_alpha(gamma: &[f64], grid: &[f64], alpha: f64) -> f64 {
    let target = 1.0 - alpha;
    match gamma.iter().position(|&g| g < target) {
        None => alpha,
        Some(0) => grid[0],
        Some(k) => {
            let f = (gamma[k - 1] - target) / (gamma[k - 1] - gamma[k]);
            (1.0 - f) * grid[k - 1] + f * grid[k]
        }
    }
}

/// Runs the calibration bootstrap and returns the calibrated intervals.
pub fn bootstrap_calibrated_cis(
    model: &TsvcModel,
    dataset: &Dataset,
    config: &TsvcConfig,
    b: usize,
    level: f64,
    seed: u64,
) -> Result<CalibratedCis> {
    check_level(level)?;
    CalibrationBootstrap::run(dataset, config, b, seed)?.calibrated_cis(model, level)
}
