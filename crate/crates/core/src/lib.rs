//! Tree-structured varying coefficient models for Gaussian and binary
//! outcomes, with confidence intervals that account for data-driven tree
//! selection.

pub mod ci;
pub mod config;
pub mod data;
pub mod engine;
pub mod error;
pub mod glm;
pub mod io;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod sim;
pub mod tree;

pub use config::{SplitSearch, TsvcConfig};
pub use data::{ColumnKind, ColumnMeta, Dataset};
pub use engine::{
    bic, build_design, design_matrix, enumerate_candidate_splits, fit_structure, fit_tsvc,
    grow_sequence, select_best_split, select_by_bic, Candidate, SplitDiagnostics, SplitSelection,
};
pub use error::{Result, TsvcError};
pub use glm::{fit_glm, Family, GlmFit};
pub use model::{Prediction, TsvcModel};
pub use tree::{CovariateRole, ModelStructure, Node, PartitionTree, SplitRule};
