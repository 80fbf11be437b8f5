use super::{check_level, normal_quantile, CiMethod, CoefficientCi};
use crate::error::Result;
use crate::model::TsvcModel;

/// `[b - z SE, b + z SE]` with `z` the `1 - alpha/2` normal quantile.
pub fn wald_interval(estimate: f64, se: f64, alpha: f64) -> (f64, f64) {
    let half = normal_quantile(1.0 - alpha / 2.0) * se;
    (estimate - half, estimate + half)
}

/// Wald intervals for every partition-specific coefficient, ignoring the
/// tree search.
pub fn wald_ci(model: &TsvcModel, level: f64) -> Result<Vec<CoefficientCi>> {
    let alpha = check_level(level)?;
    Ok(wald_at(model, level, |_| alpha, CiMethod::Wald))
}

pub(crate) fn wald_at(
    model: &TsvcModel,
    level: f64,
    alpha_of: impl Fn(usize) -> f64,
    method: CiMethod,
) -> Vec<CoefficientCi> {
    model
        .coefficient_keys()
        .into_iter()
        .map(|(j, m)| {
            let estimate = model.coefficients[j][m];
            let (lower, upper) = wald_interval(estimate, model.standard_errors[j][m], alpha_of(j));
            CoefficientCi {
                covariate: j,
                partition: m,
                estimate,
                lower,
                upper,
                level,
                method,
            }
        })
        .collect()
}
