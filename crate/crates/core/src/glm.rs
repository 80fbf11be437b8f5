//! Maximum-likelihood GLM fitting for the Gaussian-identity and
//! binomial-logit families.
//!
//! Gaussian fits are a single pivoted-QR least-squares solve. Binomial fits
//! run IRLS until the relative deviance change drops below
//! [`IRLS_TOLERANCE`] or [`IRLS_MAX_ITER`] iterations have run; a fit that
//! hits the cap (typically quasi-separation) is returned with
//! `converged = false` instead of an error.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TsvcError};
use crate::linalg::PivotedQr;

pub const IRLS_TOLERANCE: f64 = 1e-8;
pub const IRLS_MAX_ITER: usize = 50;

/// Probabilities are kept this far from 0 and 1 inside IRLS.
const PROB_EPS: f64 = 1e-15;
/// A linear predictor beyond this magnitude puts a fitted probability within
/// about 1e-13 of 0 or 1.
const SEPARATION_ETA: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GaussianIdentity,
    BinomialLogit,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::GaussianIdentity => "gaussian",
            Family::BinomialLogit => "binomial",
        }
    }

    /// Mean function `g^{-1}`.
    pub fn inverse_link(self, eta: f64) -> f64 {
        match self {
            Family::GaussianIdentity => eta,
            Family::BinomialLogit => inverse_logit(eta),
        }
    }

    pub fn link(self, mu: f64) -> f64 {
        match self {
            Family::GaussianIdentity => mu,
            Family::BinomialLogit => (mu / (1.0 - mu)).ln(),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = TsvcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "gaussian_identity" | "normal" => Ok(Family::GaussianIdentity),
            "binomial" | "binomial_logit" | "logistic" | "logit" => Ok(Family::BinomialLogit),
            other => Err(TsvcError::InvalidInput(format!("unknown family {other:?}"))),
        }
    }
}

fn inverse_logit(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmFit {
    pub family: Family,
    /// Intercept first when the design has one.
    pub coefficients: Vec<f64>,
    /// Inverse Fisher information; scaled by the residual variance for
    /// Gaussian fits.
    pub covariance: DMatrix<f64>,
    pub deviance: f64,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub linear_predictor: Vec<f64>,
}

impl GlmFit {
    pub fn nobs(&self) -> usize {
        self.linear_predictor.len()
    }

    pub fn nparams(&self) -> usize {
        self.coefficients.len()
    }

    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.nparams())
            .map(|i| self.covariance[(i, i)].max(0.0).sqrt())
            .collect()
    }
}

pub fn fit_glm(design: &DMatrix<f64>, response: &[f64], family: Family) -> Result<GlmFit> {
    fit_glm_from(design, response, family, None)
}

/// Like [`fit_glm`], with an optional IRLS starting point (ignored for the
/// Gaussian family).
pub fn fit_glm_from(
    design: &DMatrix<f64>,
    response: &[f64],
    family: Family,
    start: Option<&[f64]>,
) -> Result<GlmFit> {
    let (n, q) = design.shape();
    if response.len() != n {
        return Err(TsvcError::InvalidInput(format!(
            "design has {n} rows, response has {}",
            response.len()
        )));
    }
    if q == 0 {
        return Err(TsvcError::InvalidInput("design has no columns".into()));
    }
    if n < q {
        return Err(TsvcError::InsufficientDegreesOfFreedom { n, q });
    }
    if design.iter().any(|v| !v.is_finite()) {
        return Err(TsvcError::NonFinite("design"));
    }
    if response.iter().any(|v| !v.is_finite()) {
        return Err(TsvcError::NonFinite("response"));
    }
    if family == Family::BinomialLogit && response.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(TsvcError::InvalidInput(
            "binomial response must lie in [0, 1]".into(),
        ));
    }

    let qr = PivotedQr::new(design.clone());
    if !qr.is_full_rank() {
        return Err(TsvcError::RankDeficient {
            columns: qr.dependent_columns(),
        });
    }

    match family {
        Family::GaussianIdentity => Ok(fit_gaussian(design, response, &qr)),
        Family::BinomialLogit => Ok(fit_binomial(design, response, start)),
    }
}

fn fit_gaussian(design: &DMatrix<f64>, response: &[f64], qr: &PivotedQr) -> GlmFit {
    let (n, q) = design.shape();
    let coefficients = qr.solve(response);
    let eta = linear_predictor(design, &coefficients);
    let rss: f64 = response
        .iter()
        .zip(&eta)
        .map(|(y, e)| (y - e).powi(2))
        .sum();
    let sigma2 = if n > q { rss / (n - q) as f64 } else { 0.0 };
    GlmFit {
        family: Family::GaussianIdentity,
        coefficients,
        covariance: qr.unscaled_covariance() * sigma2,
        deviance: rss,
        log_likelihood: gaussian_profile_log_likelihood(rss, n),
        converged: true,
        iterations: 1,
        linear_predictor: eta,
    }
}

fn fit_binomial(design: &DMatrix<f64>, y: &[f64], start: Option<&[f64]>) -> GlmFit {
    let (n, q) = design.shape();
    let mut eta: Vec<f64> = match start {
        Some(b) if b.len() == q => linear_predictor(design, b),
        _ => y
            .iter()
            .map(|&v| Family::BinomialLogit.link((v + 0.5) / 2.0))
            .collect(),
    };
    let mut beta: Vec<f64> = start
        .filter(|b| b.len() == q)
        .map(<[f64]>::to_vec)
        .unwrap_or_default();
    let mut dev_old = if beta.is_empty() {
        f64::INFINITY
    } else {
        binomial_deviance(y, &eta)
    };
    let mut covariance = None;
    let mut converged = false;
    let mut iterations = 0;

    let mut xw = design.clone();
    let mut zw = vec![0.0; n];
    for iter in 1..=IRLS_MAX_ITER {
        for i in 0..n {
            let mu = clamp_prob(inverse_logit(eta[i]));
            let w = mu * (1.0 - mu);
            let sw = w.sqrt();
            zw[i] = sw * (eta[i] + (y[i] - mu) / w);
            for j in 0..q {
                xw[(i, j)] = sw * design[(i, j)];
            }
        }
        let qr = PivotedQr::new(xw.clone());
        if !qr.is_full_rank() {
            // Weights collapsed (separation); keep the previous iterate.
            break;
        }
        let next = qr.solve(&zw);
        let next_eta = linear_predictor(design, &next);
        let dev = binomial_deviance(y, &next_eta);
        iterations = iter;
        covariance = Some(qr.unscaled_covariance());
        beta = next;
        eta = next_eta;
        if (dev - dev_old).abs() / (dev.abs() + 0.1) < IRLS_TOLERANCE {
            converged = true;
            break;
        }
        dev_old = dev;
    }

    if beta.is_empty() {
        // The first weighted solve failed; fall back to the unweighted
        // least-squares start so callers still get a usable estimate.
        let qr = PivotedQr::new(design.clone());
        let z: Vec<f64> = eta.clone();
        beta = qr.solve(&z);
        eta = linear_predictor(design, &beta);
        covariance = Some(qr.unscaled_covariance() * 4.0);
    }

    // Fitted probabilities pinned at 0 or 1 mean the MLE does not exist
    // (quasi-separation), even if the deviance has stopped moving.
    if eta.iter().any(|e| e.abs() > SEPARATION_ETA) {
        converged = false;
    }
    let deviance = binomial_deviance(y, &eta);
    GlmFit {
        family: Family::BinomialLogit,
        log_likelihood: binomial_log_likelihood(y, &eta),
        coefficients: beta,
        covariance: covariance.unwrap_or_else(|| DMatrix::zeros(q, q)),
        deviance,
        converged,
        iterations,
        linear_predictor: eta,
    }
}

fn clamp_prob(mu: f64) -> f64 {
    mu.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

pub(crate) fn linear_predictor(design: &DMatrix<f64>, coefficients: &[f64]) -> Vec<f64> {
    let (n, q) = design.shape();
    let mut eta = vec![0.0; n];
    for (j, &b) in coefficients.iter().enumerate().take(q) {
        if b == 0.0 {
            continue;
        }
        for (e, x) in eta.iter_mut().zip(design.column(j).iter()) {
            *e += b * x;
        }
    }
    eta
}

/// Gaussian log-likelihood with the variance profiled out at `RSS / n`.
pub fn gaussian_profile_log_likelihood(rss: f64, n: usize) -> f64 {
    let n = n as f64;
    -0.5 * n * ((2.0 * std::f64::consts::PI * rss / n).ln() + 1.0)
}

fn binomial_log_likelihood(y: &[f64], eta: &[f64]) -> f64 {
    y.iter()
        .zip(eta)
        .map(|(&yi, &e)| {
            let mu = clamp_prob(inverse_logit(e));
            let mut ll = 0.0;
            if yi > 0.0 {
                ll += yi * mu.ln();
            }
            if yi < 1.0 {
                ll += (1.0 - yi) * (1.0 - mu).ln();
            }
            ll
        })
        .sum()
}

fn binomial_deviance(y: &[f64], eta: &[f64]) -> f64 {
    let dev: f64 = y
        .iter()
        .zip(eta)
        .map(|(&yi, &e)| {
            let mu = clamp_prob(inverse_logit(e));
            let mut d = 0.0;
            if yi > 0.0 {
                d += yi * (yi / mu).ln();
            }
            if yi < 1.0 {
                d += (1.0 - yi) * ((1.0 - yi) / (1.0 - mu)).ln();
            }
            2.0 * d
        })
        .sum();
    dev.max(0.0)
}

/// Log-likelihood of `coefficients` on `(design, response)`; for the
/// Gaussian family the variance is profiled out.
pub fn evaluate_log_likelihood(
    design: &DMatrix<f64>,
    response: &[f64],
    family: Family,
    coefficients: &[f64],
) -> f64 {
    let eta = linear_predictor(design, coefficients);
    match family {
        Family::GaussianIdentity => {
            let rss: f64 = response
                .iter()
                .zip(&eta)
                .map(|(y, e)| (y - e).powi(2))
                .sum();
            gaussian_profile_log_likelihood(rss, response.len())
        }
        Family::BinomialLogit => binomial_log_likelihood(response, &eta),
    }
}

/// `RSS / (n - q)` of a Gaussian fit.
pub fn residual_variance(fit: &GlmFit, n: usize, q: usize) -> Result<f64> {
    if fit.family != Family::GaussianIdentity {
        return Err(TsvcError::UnsupportedFamily(fit.family.name()));
    }
    if n <= q {
        return Err(TsvcError::InsufficientDegreesOfFreedom { n, q });
    }
    Ok(fit.deviance / (n - q) as f64)
}

/// Applies `g^{-1}` elementwise.
pub fn mean_response(family: Family, eta: &[f64]) -> Result<Vec<f64>> {
    if eta.iter().any(|v| !v.is_finite()) {
        return Err(TsvcError::NonFinite("linear predictor"));
    }
    Ok(eta.iter().map(|&e| family.inverse_link(e)).collect())
}
