//! Reading data, writing results, and person-period expansion.

mod document;
mod report;
mod survival;
mod table;

pub use document::{
    deserialize_model, serialize_model, CovariateDocument, ModelDocument, TreeNode,
    MODEL_SCHEMA_VERSION,
};
pub use report::{
    ci_rows, ci_table_csv, format_sig6, study_report_csv, study_report_json, write_atomic,
    CiDocument, CiRow, CI_SCHEMA_VERSION, REPORT_SCHEMA_VERSION,
};
pub use survival::{expand_discrete_hazard, HazardExpansion, SurvivalSchema};
pub use table::{load_csv, load_table, Table};
