//! Tabular outputs: CI tables and study reports, as CSV (6 significant
//! digits) and JSON (full precision), written atomically.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ci::{CiMethod, CoefficientCi};
use crate::error::{Result, TsvcError};
use crate::model::TsvcModel;
use crate::sim::StudyReport;

pub const CI_SCHEMA_VERSION: &str = "tsvc-ci/1";
pub const REPORT_SCHEMA_VERSION: &str = "tsvc-report/1";

/// `v` rounded to 6 significant digits, printed in plain decimal form.
pub fn format_sig6(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "NA".into()
        } else {
            format!("{v}")
        };
    }
    let rounded: f64 = format!("{v:.5e}").parse().unwrap_or(v);
    format!("{rounded}")
}

/// Writes `bytes` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| TsvcError::Io(e.error))?;
    Ok(())
}

/// One row of a CI table, with odds-ratio style `exp` transforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiRow {
    pub covariate: String,
    pub partition: String,
    pub estimate: f64,
    pub exp_estimate: f64,
    pub method: CiMethod,
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub exp_lower: f64,
    pub exp_upper: f64,
    /// Level actually used by bootstrap-calibrated intervals.
    pub adjusted_alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiDocument {
    pub schema_version: String,
    pub seed: u64,
    pub bootstrap_replicates: Option<usize>,
    pub bootstrap_failures: usize,
    pub rows: Vec<CiRow>,
}

pub fn ci_rows(
    model: &TsvcModel,
    intervals: &[CoefficientCi],
    adjusted_alpha: impl Fn(&CoefficientCi) -> Option<f64>,
) -> Vec<CiRow> {
    intervals
        .iter()
        .map(|ci| CiRow {
            covariate: model.covariate_names[ci.covariate].clone(),
            partition: model.partition_label(ci.covariate, ci.partition),
            estimate: ci.estimate,
            exp_estimate: ci.estimate.exp(),
            method: ci.method,
            level: ci.level,
            lower: ci.lower,
            upper: ci.upper,
            exp_lower: ci.lower.exp(),
            exp_upper: ci.upper.exp(),
            adjusted_alpha: adjusted_alpha(ci),
        })
        .collect()
}

pub fn ci_table_csv(rows: &[CiRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "covariate",
        "partition",
        "estimate",
        "exp_estimate",
        "method",
        "level",
        "lower",
        "upper",
        "exp_lower",
        "exp_upper",
        "adjusted_alpha",
    ])?;
    for r in rows {
        w.write_record([
            r.covariate.clone(),
            r.partition.clone(),
            format_sig6(r.estimate),
            format_sig6(r.exp_estimate),
            r.method.name().to_string(),
            format_sig6(r.level),
            format_sig6(r.lower),
            format_sig6(r.upper),
            format_sig6(r.exp_lower),
            format_sig6(r.exp_upper),
            r.adjusted_alpha.map(format_sig6).unwrap_or_default(),
        ])?;
    }
    w.into_inner().map_err(|e| TsvcError::Io(e.into_error()))
}

/// Long-format study table: one row per coverage proportion, split-count
/// average and mean adjusted level. `covariate` is `all` for `C_av` and
/// overall split totals.
pub fn study_report_csv(report: &StudyReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "scenario",
        "n",
        "sigma",
        "replications",
        "quantity",
        "method",
        "level",
        "covariate",
        "modifier",
        "value",
    ])?;
    for cell in &report.cells {
        let base = [
            cell.cell.scenario.name().to_string(),
            cell.cell.n.to_string(),
            format_sig6(cell.cell.sigma),
            cell.replications.to_string(),
        ];
        let name = |j: usize| format!("x{}", j + 1);
        let mut row = |quantity: &str,
                       method: &str,
                       level: String,
                       cov: String,
                       modifier: String,
                       value: f64| {
            let mut rec: Vec<String> = base.to_vec();
            rec.extend([
                quantity.to_string(),
                method.to_string(),
                level,
                cov,
                modifier,
                format_sig6(value),
            ]);
            w.write_record(&rec)
        };
        for c in &cell.coverage {
            row(
                "coverage",
                c.method.name(),
                format_sig6(c.level),
                "all".into(),
                String::new(),
                c.average,
            )?;
            for (j, v) in c.per_covariate.iter().enumerate() {
                row(
                    "coverage",
                    c.method.name(),
                    format_sig6(c.level),
                    name(j),
                    String::new(),
                    *v,
                )?;
            }
        }
        row(
            "splits",
            "",
            String::new(),
            "all".into(),
            String::new(),
            cell.splits.total,
        )?;
        for (j, per) in cell.splits.by_pair.iter().enumerate() {
            for (k, v) in per.iter().enumerate() {
                if j != k {
                    row("splits", "", String::new(), name(j), name(k), *v)?;
                }
            }
        }
        for a in &cell.adjusted_alphas {
            let level = format_sig6(a.level);
            row(
                "adjusted_alpha",
                CiMethod::BootstrapCalibrated.name(),
                level.clone(),
                "all".into(),
                String::new(),
                a.average,
            )?;
            for (j, v) in a.per_covariate.iter().enumerate() {
                row(
                    "adjusted_alpha",
                    CiMethod::BootstrapCalibrated.name(),
                    level.clone(),
                    name(j),
                    String::new(),
                    *v,
                )?;
            }
        }
    }
    w.into_inner().map_err(|e| TsvcError::Io(e.into_error()))
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    schema_version: &'static str,
    #[serde(flatten)]
    report: &'a StudyReport,
}

pub fn study_report_json(report: &StudyReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ReportDocument {
        schema_version: REPORT_SCHEMA_VERSION,
        report,
    })?)
}
