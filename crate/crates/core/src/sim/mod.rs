//! Simulation study: data-generating scenarios, replication driver and
//! coverage / split-count summaries.

mod scenario;
mod study;

pub use scenario::{generate_scenario, Scenario, ScenarioId, ScenarioSpec};
pub use study::{
    adjusted_alpha_summary, coverage_summary, replication_seed, run_replication, run_study,
    split_count_summary, summarize_cell, AdjustedAlphas, AlphaSummary, CoefficientRecord,
    CoverFlag, CoverageReport, ExcludedReplication, MethodCoverage, ReplicationRecord, SplitTable,
    StudyCell, StudyReport, StudySettings,
};
