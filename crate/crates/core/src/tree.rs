//! Per-covariate partition trees.
//!
//! Each covariate `j` owns a binary tree whose internal nodes split on some
//! other covariate `k` at an observed threshold `c` (`x_k <= c` goes left).
//! Leaves are numbered left to right; leaf `m` carries coefficient
//! `beta_jm` in the fitted model.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TsvcError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub target_covariate: usize,
    pub modifier: usize,
    pub threshold: f64,
}

/// How a covariate enters the predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateRole {
    /// Linear effect that may be partitioned.
    Varying,
    /// Linear effect that is never partitioned.
    Fixed,
    /// No effect of its own; only used in split rules.
    ModifierOnly,
}

impl CovariateRole {
    pub fn has_effect(self) -> bool {
        !matches!(self, CovariateRole::ModifierOnly)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        leaf: usize,
    },
    Split {
        modifier: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// One step on the path from the root to a leaf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition {
    pub modifier: usize,
    pub threshold: f64,
    /// `true` for `x_k <= c`, `false` for `x_k > c`.
    pub at_most: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionTree {
    covariate: usize,
    role: CovariateRole,
    /// Arena; the root is `nodes[0]`.
    nodes: Vec<Node>,
    leaf_count: usize,
}

impl PartitionTree {
    pub fn single_leaf(covariate: usize, role: CovariateRole) -> Self {
        Self {
            covariate,
            role,
            nodes: vec![Node::Leaf { leaf: 0 }],
            leaf_count: 1,
        }
    }

    /// Rebuilds a tree from an arena, validating shape and leaf numbering.
    pub fn from_nodes(covariate: usize, role: CovariateRole, nodes: Vec<Node>) -> Result<Self> {
        let mut tree = Self {
            covariate,
            role,
            nodes,
            leaf_count: 0,
        };
        if tree.nodes.is_empty() {
            return Err(TsvcError::InvalidInput(
                "partition tree has no nodes".into(),
            ));
        }
        let mut seen = vec![false; tree.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            if id >= tree.nodes.len() || seen[id] {
                return Err(TsvcError::InvalidInput("malformed partition tree".into()));
            }
            seen[id] = true;
            if let Node::Split {
                modifier,
                left,
                right,
                ..
            } = tree.nodes[id]
            {
                if modifier == covariate {
                    return Err(TsvcError::InvalidInput(format!(
                        "covariate {covariate} cannot modify its own effect"
                    )));
                }
                stack.push(right);
                stack.push(left);
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(TsvcError::InvalidInput("unreachable tree nodes".into()));
        }
        tree.renumber();
        Ok(tree)
    }

    pub fn covariate(&self) -> usize {
        self.covariate
    }

    pub fn role(&self) -> CovariateRole {
        self.role
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn split_count(&self) -> usize {
        self.leaf_count - 1
    }

    /// Leaf index for a row, given as a column accessor.
    pub fn leaf_by<F: Fn(usize) -> f64>(&self, value_of: F) -> usize {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { leaf } => return leaf,
                Node::Split {
                    modifier,
                    threshold,
                    left,
                    right,
                } => {
                    id = if value_of(modifier) <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn assign_partition(&self, row: &[f64]) -> usize {
        self.leaf_by(|k| row[k])
    }

    /// Leaf index of every row of `x`.
    pub fn assign_rows(&self, x: &DMatrix<f64>) -> Vec<usize> {
        if self.leaf_count == 1 {
            return vec![0; x.nrows()];
        }
        (0..x.nrows())
            .map(|i| self.leaf_by(|k| x[(i, k)]))
            .collect()
    }

    /// Splits `leaf` by `x_modifier <= threshold`; the left child keeps index
    /// `leaf` and the right child becomes `leaf + 1`.
    pub fn split_leaf(&mut self, leaf: usize, modifier: usize, threshold: f64) -> Result<()> {
        if modifier == self.covariate {
            return Err(TsvcError::InvalidInput(format!(
                "covariate {} cannot modify its own effect",
                self.covariate
            )));
        }
        let id = self
            .nodes
            .iter()
            .position(|n| matches!(n, Node::Leaf { leaf: l } if *l == leaf))
            .ok_or_else(|| TsvcError::InvalidInput(format!("no leaf {leaf}")))?;
        let left = self.nodes.len();
        self.nodes.push(Node::Leaf { leaf: 0 });
        self.nodes.push(Node::Leaf { leaf: 0 });
        self.nodes[id] = Node::Split {
            modifier,
            threshold,
            left,
            right: left + 1,
        };
        self.renumber();
        Ok(())
    }

    fn renumber(&mut self) {
        let mut next = 0;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            match self.nodes[id] {
                Node::Leaf { .. } => {
                    self.nodes[id] = Node::Leaf { leaf: next };
                    next += 1;
                }
                Node::Split { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        self.leaf_count = next;
    }

    /// Root-to-leaf conditions for each leaf, in leaf order.
    pub fn leaf_paths(&self) -> Vec<Vec<Condition>> {
        let mut paths = vec![Vec::new(); self.leaf_count];
        let mut stack = vec![(0usize, Vec::new())];
        while let Some((id, path)) = stack.pop() {
            match self.nodes[id] {
                Node::Leaf { leaf } => paths[leaf] = path,
                Node::Split {
                    modifier,
                    threshold,
                    left,
                    right,
                } => {
                    let mut l = path.clone();
                    l.push(Condition {
                        modifier,
                        threshold,
                        at_most: true,
                    });
                    let mut r = path;
                    r.push(Condition {
                        modifier,
                        threshold,
                        at_most: false,
                    });
                    stack.push((right, r));
                    stack.push((left, l));
                }
            }
        }
        paths
    }

    /// Number of split nodes using each modifier.
    pub fn splits_by_modifier(&self, p: usize) -> Vec<usize> {
        let mut counts = vec![0; p];
        for node in &self.nodes {
            if let Node::Split { modifier, .. } = node {
                counts[*modifier] += 1;
            }
        }
        counts
    }
}

/// The set of partitions of every covariate: the selection event.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelStructure {
    pub trees: Vec<PartitionTree>,
}

impl ModelStructure {
    pub fn no_splits(roles: &[CovariateRole]) -> Self {
        Self {
            trees: roles
                .iter()
                .enumerate()
                .map(|(j, &r)| PartitionTree::single_leaf(j, r))
                .collect(),
        }
    }

    pub fn p(&self) -> usize {
        self.trees.len()
    }

    /// Total split count `s`.
    pub fn split_count(&self) -> usize {
        self.trees.iter().map(PartitionTree::split_count).sum()
    }

    pub fn roles(&self) -> Vec<CovariateRole> {
        self.trees.iter().map(PartitionTree::role).collect()
    }

    /// Design column offset of each covariate's first leaf (`None` for
    /// modifier-only covariates). Column 0 is the intercept.
    pub fn column_offsets(&self) -> Vec<Option<usize>> {
        let mut next = 1;
        self.trees
            .iter()
            .map(|t| {
                if t.role().has_effect() {
                    let at = next;
                    next += t.leaf_count();
                    Some(at)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Number of design columns `q = 1 + sum of leaf counts of effects`.
    pub fn ncols(&self) -> usize {
        1 + self
            .trees
            .iter()
            .filter(|t| t.role().has_effect())
            .map(PartitionTree::leaf_count)
            .sum::<usize>()
    }

    /// Copy with one more split applied.
    pub fn with_split(&self, rule: &SplitRule, leaf: usize) -> Result<Self> {
        let mut next = self.clone();
        let tree = next
            .trees
            .get_mut(rule.target_covariate)
            .ok_or_else(|| TsvcError::InvalidInput("split target out of range".into()))?;
        tree.split_leaf(leaf, rule.modifier, rule.threshold)?;
        Ok(next)
    }

    /// `counts[j][k]`: splits of covariate `j`'s effect by modifier `k`.
    pub fn split_matrix(&self) -> Vec<Vec<usize>> {
        let p = self.p();
        self.trees.iter().map(|t| t.splits_by_modifier(p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario_two_tree() -> PartitionTree {
        // x1's effect: x2 <= 0.5 -> (x3 <= 0 -> 0 | x3 > 0 -> 0.5), x2 > 0.5 -> -1
        let mut t = PartitionTree::single_leaf(0, CovariateRole::Varying);
        t.split_leaf(0, 1, 0.5).unwrap();
        t.split_leaf(0, 2, 0.0).unwrap();
        t
    }

    #[test]
    fn single_leaf_always_zero() {
        let t = PartitionTree::single_leaf(0, CovariateRole::Varying);
        assert_eq!(t.assign_partition(&[1.0, -4.0]), 0);
    }

    #[test]
    fn boundary_goes_left() {
        let mut t = PartitionTree::single_leaf(0, CovariateRole::Varying);
        t.split_leaf(0, 1, 0.5).unwrap();
        assert_eq!(t.assign_partition(&[9.0, 0.5]), 0);
        assert_eq!(t.assign_partition(&[9.0, 0.50001]), 1);
    }

    #[test]
    fn two_level_tree_numbering() {
        let t = scenario_two_tree();
        assert_eq!(t.leaf_count(), 3);
        // (x2 <= 0.5 & x3 == 1) is the middle leaf.
        assert_eq!(t.assign_partition(&[0.0, 0.3, 1.0]), 1);
        assert_eq!(t.assign_partition(&[0.0, 0.3, 0.0]), 0);
        assert_eq!(t.assign_partition(&[0.0, 0.7, 1.0]), 2);
        let paths = t.leaf_paths();
        assert_eq!(paths[1].len(), 2);
        assert!(paths[1][0].at_most && !paths[1][1].at_most);
        assert_eq!(t.splits_by_modifier(3), vec![0, 1, 1]);
    }

    #[test]
    fn self_modification_rejected() {
        let mut t = PartitionTree::single_leaf(1, CovariateRole::Varying);
        assert!(t.split_leaf(0, 1, 0.0).is_err());
    }

    #[test]
    fn from_nodes_round_trip() {
        let t = scenario_two_tree();
        let back =
            PartitionTree::from_nodes(0, CovariateRole::Varying, t.nodes().to_vec()).unwrap();
        assert_eq!(back, t);
        assert!(PartitionTree::from_nodes(0, CovariateRole::Varying, vec![]).is_err());
    }

    #[test]
    fn column_offsets_skip_modifier_only() {
        let s = ModelStructure::no_splits(&[
            CovariateRole::Varying,
            CovariateRole::ModifierOnly,
            CovariateRole::Fixed,
        ]);
        assert_eq!(s.column_offsets(), vec![Some(1), None, Some(2)]);
        assert_eq!(s.ncols(), 3);
    }
}
