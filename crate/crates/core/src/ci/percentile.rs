use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{check_level, CiMethod, CoefficientCi};
use crate::config::TsvcConfig;
use crate::data::Dataset;
use crate::engine::{fit_structure, fit_tsvc};
use crate::error::{Result, TsvcError};
use crate::glm::Family;
use crate::model::TsvcModel;
use crate::rng::{stream, Domain};

/// Bootstrap estimates of every coefficient of the original model.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapRun {
    pub replicate_count: usize,
    pub seed: u64,
    /// `estimates[j][m][b]`: the replicate-`b` estimate of coefficient
    /// `(j, m)` of the original model.
    pub estimates: Vec<Vec<Vec<f64>>>,
    /// Replicates whose tree search failed or whose final fit did not
    /// converge. They are kept (with a fallback fit where needed).
    pub failed_fits: usize,
    /// Split matrix `[covariate][modifier]` of each replicate's model.
    pub structures: Vec<Vec<Vec<usize>>>,
}

/// Estimates, failure flag and split matrix of one replicate.
type Replicate = (Vec<Vec<f64>>, bool, Vec<Vec<usize>>);

impl BootstrapRun {
    /// Runs the parametric bootstrap: `b` outcome vectors from the fitted
    /// model, the full tree search on each, and averaging of each replicate's
    /// coefficient function over the original partitions.
    pub fn parametric(
        model: &TsvcModel,
        dataset: &Dataset,
        config: &TsvcConfig,
        b: usize,
        seed: u64,
    ) -> Result<Self> {
        if b == 0 {
            return Err(TsvcError::Config(
                "bootstrap needs at least one replicate".into(),
            ));
        }
        let eta = model.predict(dataset.covariates())?.linear_predictor;
        let sigma = residual_sd(model)?;
        let replicates: Vec<Result<Replicate>> = (0..b)
            .into_par_iter()
            .map(|r| {
                let y = draw_outcome(model.family(), &eta, sigma, seed, r);
                let boot_data = dataset.with_outcome(y)?;
                let (boot_model, failed) = match fit_tsvc(&boot_data, config) {
                    Ok(m) => {
                        let failed = !m.fit.converged;
                        (m, failed)
                    }
                    Err(_) => (fit_structure(&boot_data, &model.structure, config)?, true),
                };
                let est = bootstrap_estimate(model, &boot_model, dataset)?;
                Ok((est, failed, boot_model.structure.split_matrix()))
            })
            .collect();

        let mut estimates: Vec<Vec<Vec<f64>>> = model
            .coefficients
            .iter()
            .map(|c| vec![Vec::with_capacity(b); c.len()])
            .collect();
        let mut failed_fits = 0;
        let mut structures = Vec::with_capacity(b);
        for rep in replicates {
            let (est, failed, splits) = rep?;
            for (j, per_leaf) in est.into_iter().enumerate() {
                for (m, v) in per_leaf.into_iter().enumerate() {
                    estimates[j][m].push(v);
                }
            }
            failed_fits += usize::from(failed);
            structures.push(splits);
        }
        Ok(Self {
            replicate_count: b,
            seed,
            estimates,
            failed_fits,
            structures,
        })
    }

    /// Percentile intervals at `level` for every coefficient of `model`,
    /// the model this run was drawn from.
    pub fn percentile_cis(&self, model: &TsvcModel, level: f64) -> Result<Vec<CoefficientCi>> {
        model
            .coefficient_keys()
            .into_iter()
            .map(|(j, m)| {
                let (lower, upper) = percentile_interval(&self.estimates[j][m], level)?;
                Ok(CoefficientCi {
                    covariate: j,
                    partition: m,
                    estimate: model.coefficients[j][m],
                    lower,
                    upper,
                    level,
                    method: CiMethod::ParametricPercentile,
                })
            })
            .collect()
    }
}

fn residual_sd(model: &TsvcModel) -> Result<f64> {
    match model.family() {
        Family::GaussianIdentity => model.residual_variance.map(f64::sqrt).ok_or_else(|| {
            TsvcError::InvalidInput("gaussian model without residual variance".into())
        }),
        Family::BinomialLogit => Ok(0.0),
    }
}

/// Outcome vector of replicate `b`; row `i` uses its own stream so the draw
/// does not depend on row order or scheduling.
fn draw_outcome(family: Family, eta: &[f64], sigma: f64, seed: u64, b: usize) -> Vec<f64> {
    eta.iter()
        .enumerate()
        .map(|(i, &e)| {
            let mut rng = stream(seed, Domain::ParametricBootstrap, b as u64, i as u64);
            match family {
                Family::GaussianIdentity => {
                    let z: f64 = rng.sample(StandardNormal);
                    e + sigma * z
                }
                Family::BinomialLogit => {
                    let p = family.inverse_link(e);
                    if rng.random::<f64>() < p {
                        1.0
                    } else {
                        0.0
                    }
                }
            }
        })
        .collect()
}

/// `b` outcome vectors from the conditional distribution of `Y | X = x_i`
/// under `model`, with the covariates of `dataset` held fixed.
pub fn sample_parametric(
    model: &TsvcModel,
    dataset: &Dataset,
    b: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let eta = model.predict(dataset.covariates())?.linear_predictor;
    let sigma = residual_sd(model)?;
    Ok((0..b)
        .map(|r| draw_outcome(model.family(), &eta, sigma, seed, r))
        .collect())
}

/// For every leaf `N_jm` of the original model, the mean over its rows of the
/// bootstrap model's coefficient function `beta_j(x_i)`.
pub fn bootstrap_estimate(
    original: &TsvcModel,
    boot_model: &TsvcModel,
    dataset: &Dataset,
) -> Result<Vec<Vec<f64>>> {
    if original.p() != boot_model.p() || original.p() != dataset.p() {
        return Err(TsvcError::InvalidInput(
            "models and dataset disagree on the number of covariates".into(),
        ));
    }
    let x = dataset.covariates();
    let mut out = Vec::with_capacity(original.p());
    for (j, coefs) in original.coefficients.iter().enumerate() {
        if coefs.is_empty() {
            out.push(Vec::new());
            continue;
        }
        let leaves = original.structure.trees[j].assign_rows(x);
        let values = boot_model.coefficient_function(j, x);
        let mut sums = vec![0.0; coefs.len()];
        let mut counts = vec![0usize; coefs.len()];
        for (m, v) in leaves.into_iter().zip(values) {
            sums[m] += v;
            counts[m] += 1;
        }
        if let Some(m) = counts.iter().position(|&c| c == 0) {
            return Err(TsvcError::DegenerateDesign {
                covariate: j,
                leaf: m,
            });
        }
        out.push(
            sums.iter()
                .zip(&counts)
                .map(|(s, &c)| s / c as f64)
                .collect(),
        );
    }
    Ok(out)
}

/// Smallest replicate count with both percentile ranks inside `1..=B`.
fn required_replicates(alpha: f64) -> usize {
    let r = 2.0 / alpha;
    let nearest = r.round();
    if (r - nearest).abs() < 1e-9 {
        nearest as usize
    } else {
        r.ceil() as usize
    }
}

/// Order statistics at ranks `floor((B+1) alpha/2)` and
/// `ceil((B+1)(1 - alpha/2))` (1-based).
pub fn percentile_interval(estimates: &[f64], level: f64) -> Result<(f64, f64)> {
    let alpha = check_level(level)?;
    let b = estimates.len();
    let required = required_replicates(alpha);
    if b < required {
        return Err(TsvcError::InsufficientReplicates {
            replicates: b,
            required,
            level,
        });
    }
    let mut sorted = estimates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let scale = (b + 1) as f64;
    // The small nudges keep exact products like 1001 * 0.025 = 25.025 from
    // landing on the wrong side of an integer through rounding error.
    let lo = ((scale * alpha / 2.0 + 1e-9).floor() as usize).clamp(1, b);
    let hi = ((scale * (1.0 - alpha / 2.0) - 1e-9).ceil() as usize).clamp(1, b);
    Ok((sorted[lo - 1], sorted[hi - 1]))
}

/// Runs the parametric bootstrap and returns percentile intervals for every
/// coefficient of `model` together with the raw replicate estimates.
pub fn parametric_percentile_cis(
    model: &TsvcModel,
    dataset: &Dataset,
    config: &TsvcConfig,
    b: usize,
    level: f64,
    seed: u64,
) -> Result<(Vec<CoefficientCi>, BootstrapRun)> {
    check_level(level)?;
    let run = BootstrapRun::parametric(model, dataset, config, b, seed)?;
    let cis = run.percentile_cis(model, level)?;
    Ok((cis, run))
}
