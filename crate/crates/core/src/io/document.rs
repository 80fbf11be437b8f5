//! Versioned JSON documents for fitted models.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::TsvcConfig;
use crate::error::{Result, TsvcError};
use crate::glm::{Family, GlmFit};
use crate::model::TsvcModel;
use crate::tree::{CovariateRole, ModelStructure, Node, PartitionTree};

pub const MODEL_SCHEMA_VERSION: &str = "tsvc-model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        leaf: usize,
    },
    Split {
        modifier: String,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateDocument {
    pub name: String,
    pub role: CovariateRole,
    pub tree: TreeNode,
    /// Readable description of each leaf, in leaf order.
    pub partitions: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub schema_version: String,
    pub family: Family,
    pub outcome: String,
    pub nobs: usize,
    pub splits: usize,
    pub bic: f64,
    pub log_likelihood: f64,
    pub deviance: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual_variance: Option<f64>,
    pub intercept: f64,
    pub covariates: Vec<CovariateDocument>,
    /// All design coefficients: intercept, then each covariate's leaves.
    pub design_coefficients: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub fitted_linear_predictor: Vec<f64>,
    pub config: TsvcConfig,
    pub tree_rendering: Vec<String>,
}

fn tree_to_doc(tree: &PartitionTree, id: usize, names: &[String]) -> TreeNode {
    match tree.nodes()[id] {
        Node::Leaf { leaf } => TreeNode::Leaf { leaf },
        Node::Split {
            modifier,
            threshold,
            left,
            right,
        } => TreeNode::Split {
            modifier: names[modifier].clone(),
            threshold,
            left: Box::new(tree_to_doc(tree, left, names)),
            right: Box::new(tree_to_doc(tree, right, names)),
        },
    }
}

fn doc_to_nodes(doc: &TreeNode, names: &[String], nodes: &mut Vec<Node>) -> Result<usize> {
    let id = nodes.len();
    nodes.push(Node::Leaf { leaf: 0 });
    match doc {
        TreeNode::Leaf { leaf } => nodes[id] = Node::Leaf { leaf: *leaf },
        TreeNode::Split {
            modifier,
            threshold,
            left,
            right,
        } => {
            let k = names
                .iter()
                .position(|n| n == modifier)
                .ok_or_else(|| TsvcError::MissingColumn(modifier.clone()))?;
            let l = doc_to_nodes(left, names, nodes)?;
            let r = doc_to_nodes(right, names, nodes)?;
            nodes[id] = Node::Split {
                modifier: k,
                threshold: *threshold,
                left: l,
                right: r,
            };
        }
    }
    Ok(id)
}

impl ModelDocument {
    pub fn from_model(model: &TsvcModel, outcome: &str) -> Self {
        let names = &model.covariate_names;
        let covariates = model
            .structure
            .trees
            .iter()
            .enumerate()
            .map(|(j, tree)| CovariateDocument {
                name: names[j].clone(),
                role: tree.role(),
                tree: tree_to_doc(tree, 0, names),
                partitions: (0..tree.leaf_count())
                    .map(|m| model.partition_label(j, m))
                    .collect(),
                coefficients: model.coefficients[j].clone(),
                standard_errors: model.standard_errors[j].clone(),
            })
            .collect();
        let cov = &model.fit.covariance;
        Self {
            schema_version: MODEL_SCHEMA_VERSION.to_string(),
            family: model.family(),
            outcome: outcome.to_string(),
            nobs: model.nobs(),
            splits: model.splits_performed,
            bic: model.bic,
            log_likelihood: model.fit.log_likelihood,
            deviance: model.fit.deviance,
            converged: model.fit.converged,
            iterations: model.fit.iterations,
            residual_variance: model.residual_variance,
            intercept: model.intercept,
            covariates,
            design_coefficients: model.fit.coefficients.clone(),
            covariance: (0..cov.nrows())
                .map(|i| cov.row(i).iter().copied().collect())
                .collect(),
            fitted_linear_predictor: model.fit.linear_predictor.clone(),
            config: model.config.clone(),
            tree_rendering: model.render_tree(),
        }
    }

    pub fn to_model(&self) -> Result<TsvcModel> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(TsvcError::SchemaVersion {
                found: self.schema_version.clone(),
                expected: MODEL_SCHEMA_VERSION.to_string(),
            });
        }
        let names: Vec<String> = self.covariates.iter().map(|c| c.name.clone()).collect();
        let mut trees = Vec::with_capacity(names.len());
        for (j, c) in self.covariates.iter().enumerate() {
            let mut nodes = Vec::new();
            doc_to_nodes(&c.tree, &names, &mut nodes)?;
            trees.push(PartitionTree::from_nodes(j, c.role, nodes)?);
        }
        let structure = ModelStructure { trees };
        let q = structure.ncols();
        if self.design_coefficients.len() != q
            || self.covariance.len() != q
            || self.covariance.iter().any(|r| r.len() != q)
        {
            return Err(TsvcError::InvalidInput(
                "model document coefficients do not match its trees".into(),
            ));
        }
        self.config.validate(names.len())?;
        let fit = GlmFit {
            family: self.family,
            coefficients: self.design_coefficients.clone(),
            covariance: DMatrix::from_fn(q, q, |i, k| self.covariance[i][k]),
            deviance: self.deviance,
            log_likelihood: self.log_likelihood,
            converged: self.converged,
            iterations: self.iterations,
            linear_predictor: self.fitted_linear_predictor.clone(),
        };
        Ok(TsvcModel::from_fit(
            structure,
            fit,
            names,
            self.config.clone(),
        ))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a document, checking the schema version before anything else.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("schema_version")
            .and_then(serde_json::Value::as_str)
            .unwrap_or("")
            .to_string();
        if found != MODEL_SCHEMA_VERSION {
            return Err(TsvcError::SchemaVersion {
                found,
                expected: MODEL_SCHEMA_VERSION.to_string(),
            });
        }
        Ok(serde_json::from_value(value)?)
    }
}

pub fn serialize_model(model: &TsvcModel, outcome: &str) -> Result<String> {
    ModelDocument::from_model(model, outcome).to_json()
}

pub fn deserialize_model(text: &str) -> Result<TsvcModel> {
    ModelDocument::from_json(text)?.to_model()
}
