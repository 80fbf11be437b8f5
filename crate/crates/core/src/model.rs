use nalgebra::DMatrix;

use crate::config::TsvcConfig;
use crate::error::{Result, TsvcError};
use crate::glm::{mean_response, Family, GlmFit};
use crate::tree::{Condition, ModelStructure};

/// A fitted tree-structured varying coefficient model.
///
/// `coefficients[j][m]` is the effect of covariate `j` in leaf `m` of its
/// tree; modifier-only covariates have empty vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TsvcModel {
    pub structure: ModelStructure,
    pub covariate_names: Vec<String>,
    pub config: TsvcConfig,
    pub intercept: f64,
    pub coefficients: Vec<Vec<f64>>,
    pub standard_errors: Vec<Vec<f64>>,
    /// `RSS / (n - q)`; `None` for the binomial family.
    pub residual_variance: Option<f64>,
    pub fit: GlmFit,
    pub bic: f64,
    pub splits_performed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub linear_predictor: Vec<f64>,
    pub mean: Vec<f64>,
}

impl TsvcModel {
    pub(crate) fn from_fit(
        structure: ModelStructure,
        fit: GlmFit,
        covariate_names: Vec<String>,
        config: TsvcConfig,
    ) -> Self {
        let n = fit.nobs();
        let q = fit.nparams();
        let se = fit.standard_errors();
        let offsets = structure.column_offsets();
        let mut coefficients = Vec::with_capacity(structure.p());
        let mut standard_errors = Vec::with_capacity(structure.p());
        for (tree, offset) in structure.trees.iter().zip(&offsets) {
            match offset {
                Some(at) => {
                    let range = *at..*at + tree.leaf_count();
                    coefficients.push(fit.coefficients[range.clone()].to_vec());
                    standard_errors.push(se[range].to_vec());
                }
                None => {
                    coefficients.push(Vec::new());
                    standard_errors.push(Vec::new());
                }
            }
        }
        let residual_variance = match fit.family {
            Family::GaussianIdentity if n > q => Some(fit.deviance / (n - q) as f64),
            Family::GaussianIdentity => Some(0.0),
            Family::BinomialLogit => None,
        };
        let s = structure.split_count();
        Self {
            intercept: fit.coefficients[0],
            bic: crate::engine::bic(fit.log_likelihood, s, n),
            splits_performed: s,
            structure,
            covariate_names,
            config,
            coefficients,
            standard_errors,
            residual_variance,
            fit,
        }
    }

    pub fn family(&self) -> Family {
        self.fit.family
    }

    pub fn p(&self) -> usize {
        self.structure.p()
    }

    pub fn nobs(&self) -> usize {
        self.fit.nobs()
    }

    /// `(covariate, leaf)` of every partition-specific coefficient, in design
    /// column order.
    pub fn coefficient_keys(&self) -> Vec<(usize, usize)> {
        self.coefficients
            .iter()
            .enumerate()
            .flat_map(|(j, c)| (0..c.len()).map(move |m| (j, m)))
            .collect()
    }

    /// Coefficient of covariate `j` at a covariate row.
    pub fn varying_coefficient(&self, j: usize, row: &[f64]) -> Result<f64> {
        let coefs = self
            .coefficients
            .get(j)
            .ok_or_else(|| TsvcError::InvalidInput(format!("no covariate {j}")))?;
        if coefs.is_empty() {
            return Err(TsvcError::InvalidInput(format!(
                "covariate {j} is modifier-only and has no coefficient"
            )));
        }
        Ok(coefs[self.structure.trees[j].assign_partition(row)])
    }

    /// `beta_j(x_i)` for every row of `x`.
    pub fn coefficient_function(&self, j: usize, x: &DMatrix<f64>) -> Vec<f64> {
        let coefs = &self.coefficients[j];
        self.structure.trees[j]
            .assign_rows(x)
            .into_iter()
            .map(|m| coefs[m])
            .collect()
    }

    pub fn predict(&self, rows: &DMatrix<f64>) -> Result<Prediction> {
        if rows.ncols() != self.p() {
            return Err(TsvcError::InvalidInput(format!(
                "rows have {} columns, model expects {}",
                rows.ncols(),
                self.p()
            )));
        }
        let mut eta = vec![self.intercept; rows.nrows()];
        for (j, coefs) in self.coefficients.iter().enumerate() {
            if coefs.is_empty() {
                continue;
            }
            let leaves = self.structure.trees[j].assign_rows(rows);
            for (i, (e, m)) in eta.iter_mut().zip(leaves).enumerate() {
                *e += coefs[m] * rows[(i, j)];
            }
        }
        let mean = mean_response(self.family(), &eta)?;
        Ok(Prediction {
            linear_predictor: eta,
            mean,
        })
    }

    /// Human-readable description of leaf `m` of covariate `j`'s tree.
    pub fn partition_label(&self, j: usize, m: usize) -> String {
        let paths = self.structure.trees[j].leaf_paths();
        describe_path(&paths[m], &self.covariate_names)
    }

    /// One line per coefficient: `x1 | x2 <= 0.5 -> 0.25`.
    pub fn render_tree(&self) -> Vec<String> {
        let mut lines = vec![format!("(intercept) -> {}", self.intercept)];
        for (j, coefs) in self.coefficients.iter().enumerate() {
            for (m, b) in coefs.iter().enumerate() {
                lines.push(format!(
                    "{} | {} -> {}",
                    self.covariate_names[j],
                    self.partition_label(j, m),
                    b
                ));
            }
        }
        lines
    }
}

pub(crate) fn describe_path(path: &[Condition], names: &[String]) -> String {
    if path.is_empty() {
        return "---".to_string();
    }
    path.iter()
        .map(|c| {
            format!(
                "{} {} {}",
                names[c.modifier],
                if c.at_most { "<=" } else { ">" },
                c.threshold
            )
        })
        .collect::<Vec<_>>()
        .join(" & ")
}
