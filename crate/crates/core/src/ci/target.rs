use nalgebra::DMatrix;

use crate::engine::design_matrix;
use crate::error::{Result, TsvcError};
use crate::glm::{fit_glm, Family};
use crate::tree::ModelStructure;

/// Coefficients that the structure `structure` would have if the outcome
/// were replaced by its true conditional mean `true_mean`, covariates held
/// at their observed values. These are the targets a CI for that structure
/// should cover.
pub fn best_approximating_coefficients(
    structure: &ModelStructure,
    true_mean: &[f64],
    covariates: &DMatrix<f64>,
    family: Family,
) -> Result<Vec<Vec<f64>>> {
    if true_mean.len() != covariates.nrows() {
        return Err(TsvcError::InvalidInput(format!(
            "{} mean values for {} rows",
            true_mean.len(),
            covariates.nrows()
        )));
    }
    let design = design_matrix(covariates, structure)?;
    let fit = fit_glm(&design, true_mean, family)?;
    let offsets = structure.column_offsets();
    Ok(structure
        .trees
        .iter()
        .zip(offsets)
        .map(|(tree, off)| match off {
            Some(at) => fit.coefficients[at..at + tree.leaf_count()].to_vec(),
            None => Vec::new(),
        })
        .collect())
}
