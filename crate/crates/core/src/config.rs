use serde::{Deserialize, Serialize};

use crate::error::{Result, TsvcError};
use crate::glm::Family;
use crate::tree::CovariateRole;

pub const DEFAULT_MAX_SPLITS: usize = 5;
pub const DEFAULT_MIN_NODE_SIZE: usize = 5;

/// How candidate splits are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSearch {
    /// Rank-one deviance updates for Gaussian fits, full refits otherwise.
    #[default]
    Auto,
    /// Refit the complete GLM for every candidate.
    Refit,
}

/// Settings of the tree-building procedure.
///
/// Every covariate index appears in exactly one of `vary_set`,
/// `fixed_effects` and `modifier_only`. `modifier_sets[j]` lists the
/// covariates allowed to split covariate `j`'s effect and is only consulted
/// for `j` in `vary_set`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsvcConfig {
    pub max_splits: usize,
    pub min_node_size: usize,
    pub family: Family,
    pub vary_set: Vec<usize>,
    pub modifier_sets: Vec<Vec<usize>>,
    pub fixed_effects: Vec<usize>,
    pub modifier_only: Vec<usize>,
    #[serde(default)]
    pub split_search: SplitSearch,
}

impl TsvcConfig {
    /// All covariates varying, each modifiable by every other covariate.
    pub fn new(p: usize, family: Family) -> Self {
        Self {
            max_splits: DEFAULT_MAX_SPLITS,
            min_node_size: DEFAULT_MIN_NODE_SIZE,
            family,
            vary_set: (0..p).collect(),
            modifier_sets: (0..p)
                .map(|j| (0..p).filter(|&k| k != j).collect())
                .collect(),
            fixed_effects: Vec::new(),
            modifier_only: Vec::new(),
            split_search: SplitSearch::Auto,
        }
    }

    pub fn with_max_splits(mut self, s: usize) -> Self {
        self.max_splits = s;
        self
    }

    pub fn with_min_node_size(mut self, m: usize) -> Self {
        self.min_node_size = m;
        self
    }

    pub fn p(&self) -> usize {
        self.modifier_sets.len()
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.modifier_sets.len() != p {
            return Err(TsvcError::Config(format!(
                "modifier_sets has {} entries for {p} covariates",
                self.modifier_sets.len()
            )));
        }
        if self.min_node_size == 0 {
            return Err(TsvcError::Config("min_node_size must be at least 1".into()));
        }
        let mut seen = vec![0u8; p];
        for &j in self
            .vary_set
            .iter()
            .chain(&self.fixed_effects)
            .chain(&self.modifier_only)
        {
            if j >= p {
                return Err(TsvcError::Config(format!(
                    "covariate index {j} out of range"
                )));
            }
            seen[j] += 1;
        }
        if let Some(j) = seen.iter().position(|&c| c != 1) {
            return Err(TsvcError::Config(format!(
                "covariate {j} must belong to exactly one of vary_set, fixed_effects, modifier_only"
            )));
        }
        for (j, mods) in self.modifier_sets.iter().enumerate() {
            if mods.contains(&j) {
                return Err(TsvcError::Config(format!(
                    "covariate {j} cannot modify its own effect"
                )));
            }
            if let Some(k) = mods.iter().find(|&&k| k >= p) {
                return Err(TsvcError::Config(format!(
                    "modifier index {k} out of range"
                )));
            }
        }
        Ok(())
    }

    pub fn roles(&self) -> Vec<CovariateRole> {
        let p = self.p();
        let mut roles = vec![CovariateRole::Varying; p];
        for &j in &self.fixed_effects {
            roles[j] = CovariateRole::Fixed;
        }
        for &j in &self.modifier_only {
            roles[j] = CovariateRole::ModifierOnly;
        }
        roles
    }

    /// Allowed modifiers of covariate `j`, ascending; empty unless `j` varies.
    pub fn modifiers_of(&self, j: usize) -> Vec<usize> {
        if !self.vary_set.contains(&j) {
            return Vec::new();
        }
        let mut m = self.modifier_sets[j].clone();
        m.sort_unstable();
        m.dedup();
        m
    }
}
