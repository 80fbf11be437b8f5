use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{generate_scenario, ScenarioId, ScenarioSpec};
use crate::ci::{
    best_approximating_coefficients, wald_ci, BootstrapRun, CalibrationBootstrap, CiMethod,
    CoefficientCi,
};
use crate::engine::fit_tsvc;
use crate::error::{Result, TsvcError};
use crate::glm::Family;
use crate::rng::derive_seed;

/// What to compute in every replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySettings {
    pub methods: Vec<CiMethod>,
    pub levels: Vec<f64>,
    /// Bootstrap replicates for both bootstrap-based methods.
    pub bootstrap_replicates: usize,
}

impl StudySettings {
    /// Split counts only.
    pub fn splits_only() -> Self {
        Self {
            methods: Vec::new(),
            levels: Vec::new(),
            bootstrap_replicates: 0,
        }
    }

    fn needs(&self, method: CiMethod) -> bool {
        self.methods.contains(&method) && !self.levels.is_empty()
    }
}

/// One interval of one coefficient and whether it covers the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverFlag {
    pub method: CiMethod,
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRecord {
    pub covariate: usize,
    pub partition: usize,
    pub estimate: f64,
    /// Best-approximating coefficient of the selected structure.
    pub target: f64,
    pub flags: Vec<CoverFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustedAlphas {
    pub level: f64,
    pub alphas: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replicate: usize,
    pub seed: u64,
    /// `splits[j][k]`: splits of covariate `j`'s effect by modifier `k`.
    pub splits: Vec<Vec<usize>>,
    pub coefficients: Vec<CoefficientRecord>,
    pub adjusted_alphas: Vec<AdjustedAlphas>,
    pub bootstrap_failures: usize,
}

impl ReplicationRecord {
    pub fn total_splits(&self) -> usize {
        self.splits.iter().flatten().sum()
    }

    /// Number of coefficients of covariate `j`.
    pub fn coefficient_count(&self, j: usize) -> usize {
        self.coefficients
            .iter()
            .filter(|c| c.covariate == j)
            .count()
    }

    pub fn flag(&self, coefficient: usize, method: CiMethod, level: f64) -> Option<&CoverFlag> {
        self.coefficients[coefficient]
            .flags
            .iter()
            .find(|f| f.method == method && same_level(f.level, level))
    }
}

fn same_level(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

/// Generates data for `spec`, fits the model, computes the targets and
/// every requested interval, and records which intervals cover.
pub fn run_replication(
    spec: &ScenarioSpec,
    settings: &StudySettings,
    replicate: usize,
) -> Result<ReplicationRecord> {
    let scenario = generate_scenario(spec)?;
    let data = &scenario.dataset;
    let config = &scenario.config;
    let model = fit_tsvc(data, config)?;
    let targets = best_approximating_coefficients(
        &model.structure,
        &scenario.true_mean,
        data.covariates(),
        Family::GaussianIdentity,
    )?;

    let mut intervals: Vec<CoefficientCi> = Vec::new();
    let mut adjusted_alphas = Vec::new();
    let mut bootstrap_failures = 0;
    if settings.needs(CiMethod::Wald) {
        for &level in &settings.levels {
            intervals.extend(wald_ci(&model, level)?);
        }
    }
    if settings.needs(CiMethod::ParametricPercentile) {
        let run = BootstrapRun::parametric(
            &model,
            data,
            config,
            settings.bootstrap_replicates,
            derive_seed(spec.seed, 1, 0),
        )?;
        bootstrap_failures += run.failed_fits;
        for &level in &settings.levels {
            intervals.extend(run.percentile_cis(&model, level)?);
        }
    }
    if settings.needs(CiMethod::BootstrapCalibrated) {
        let run = CalibrationBootstrap::run(
            data,
            config,
            settings.bootstrap_replicates,
            derive_seed(spec.seed, 2, 0),
        )?;
        bootstrap_failures += run.failed_fits;
        for &level in &settings.levels {
            let cal = run.calibrated_cis(&model, level)?;
            intervals.extend(cal.intervals);
            adjusted_alphas.push(AdjustedAlphas {
                level,
                alphas: cal.adjusted_alphas,
            });
        }
    }

    let coefficients = model
        .coefficient_keys()
        .into_iter()
        .map(|(j, m)| {
            let target = targets[j][m];
            let flags = intervals
                .iter()
                .filter(|ci| ci.covariate == j && ci.partition == m)
                .map(|ci| CoverFlag {
                    method: ci.method,
                    level: ci.level,
                    lower: ci.lower,
                    upper: ci.upper,
                    covered: ci.contains(target),
                })
                .collect();
            CoefficientRecord {
                covariate: j,
                partition: m,
                estimate: model.coefficients[j][m],
                target,
                flags,
            }
        })
        .collect();

    Ok(ReplicationRecord {
        replicate,
        seed: spec.seed,
        splits: model.structure.split_matrix(),
        coefficients,
        adjusted_alphas,
        bootstrap_failures,
    })
}

/// Coverage proportions of one method at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCoverage {
    pub method: CiMethod,
    pub level: f64,
    /// `C_j`: per replication the share of covariate `j`'s coefficients
    /// covered, averaged over replications.
    pub per_covariate: Vec<f64>,
    /// `C_av`: mean of `per_covariate`.
    pub average: f64,
}

/// Computes `C_j` and `C_av`. Replications in which covariate `j` has no
/// interval for this method and level do not enter `C_j`.
pub fn coverage_summary(
    records: &[ReplicationRecord],
    p: usize,
    method: CiMethod,
    level: f64,
) -> MethodCoverage {
    let mut sums = vec![0.0; p];
    let mut counts = vec![0usize; p];
    for rec in records {
        for j in 0..p {
            let flags: Vec<bool> = rec
                .coefficients
                .iter()
                .filter(|c| c.covariate == j)
                .filter_map(|c| {
                    c.flags
                        .iter()
                        .find(|f| f.method == method && same_level(f.level, level))
                        .map(|f| f.covered)
                })
                .collect();
            if flags.is_empty() {
                continue;
            }
            let covered = flags.iter().filter(|&&f| f).count();
            sums[j] += covered as f64 / flags.len() as f64;
            counts[j] += 1;
        }
    }
    let per_covariate: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c == 0 { f64::NAN } else { s / c as f64 })
        .collect();
    let defined: Vec<f64> = per_covariate
        .iter()
        .copied()
        .filter(|c| !c.is_nan())
        .collect();
    let average = if defined.is_empty() {
        f64::NAN
    } else {
        defined.iter().sum::<f64>() / defined.len() as f64
    };
    MethodCoverage {
        method,
        level,
        per_covariate,
        average,
    }
}

/// Mean split counts per replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitTable {
    /// `by_pair[j][k]`: splits of covariate `j`'s effect by modifier `k`.
    pub by_pair: Vec<Vec<f64>>,
    /// Splits of covariate `j`'s effect by any modifier.
    pub by_covariate: Vec<f64>,
    pub total: f64,
}

pub fn split_count_summary(records: &[ReplicationRecord], p: usize) -> SplitTable {
    let mut by_pair = vec![vec![0.0; p]; p];
    for rec in records {
        for (j, row) in rec.splits.iter().enumerate() {
            for (k, &c) in row.iter().enumerate() {
                by_pair[j][k] += c as f64;
            }
        }
    }
    let r = records.len().max(1) as f64;
    by_pair.iter_mut().flatten().for_each(|v| *v /= r);
    let by_covariate: Vec<f64> = by_pair.iter().map(|row| row.iter().sum()).collect();
    let total = by_covariate.iter().sum();
    SplitTable {
        by_pair,
        by_covariate,
        total,
    }
}

/// Average adjusted calibration level at one nominal level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSummary {
    pub level: f64,
    pub per_covariate: Vec<f64>,
    pub average: f64,
}

pub fn adjusted_alpha_summary(records: &[ReplicationRecord], p: usize, level: f64) -> AlphaSummary {
    let mut sums = vec![0.0; p];
    let mut counts = vec![0usize; p];
    for rec in records {
        let Some(entry) = rec
            .adjusted_alphas
            .iter()
            .find(|a| same_level(a.level, level))
        else {
            continue;
        };
        for (j, a) in entry.alphas.iter().enumerate().take(p) {
            if let Some(a) = a {
                sums[j] += a;
                counts[j] += 1;
            }
        }
    }
    let per_covariate: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c == 0 { f64::NAN } else { s / c as f64 })
        .collect();
    let defined: Vec<f64> = per_covariate
        .iter()
        .copied()
        .filter(|v| !v.is_nan())
        .collect();
    let average = if defined.is_empty() {
        f64::NAN
    } else {
        defined.iter().sum::<f64>() / defined.len() as f64
    };
    AlphaSummary {
        level,
        per_covariate,
        average,
    }
}

/// One `(scenario, n, sigma)` combination of a study grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub scenario: ScenarioId,
    pub n: usize,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedReplication {
    pub replicate: usize,
    pub reason: String,
}

/// Results for one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub cell: StudyCell,
    pub requested_replications: usize,
    /// Replications entering the summaries.
    pub replications: usize,
    pub excluded: Vec<ExcludedReplication>,
    pub coverage: Vec<MethodCoverage>,
    pub splits: SplitTable,
    pub adjusted_alphas: Vec<AlphaSummary>,
    pub bootstrap_failures: usize,
    #[serde(skip)]
    pub records: Vec<ReplicationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub master_seed: u64,
    pub settings: StudySettings,
    pub cells: Vec<CoverageReport>,
}

/// Seed of replication `r` in grid cell `cell`.
pub fn replication_seed(master_seed: u64, cell: usize, r: usize) -> u64 {
    derive_seed(master_seed, cell as u64, r as u64)
}

fn run_cell(
    cell: &StudyCell,
    cell_index: usize,
    replications: usize,
    settings: &StudySettings,
    master_seed: u64,
) -> CoverageReport {
    let outcomes: Vec<std::result::Result<ReplicationRecord, ExcludedReplication>> = (0
        ..replications)
        .into_par_iter()
        .map(|r| {
            let spec = ScenarioSpec {
                scenario: cell.scenario,
                n: cell.n,
                sigma: cell.sigma,
                seed: replication_seed(master_seed, cell_index, r),
            };
            run_replication(&spec, settings, r).map_err(|e| ExcludedReplication {
                replicate: r,
                reason: e.to_string(),
            })
        })
        .collect();
    let mut records = Vec::with_capacity(replications);
    let mut excluded = Vec::new();
    for o in outcomes {
        match o {
            Ok(rec) => records.push(rec),
            Err(e) => excluded.push(e),
        }
    }
    summarize_cell(*cell, replications, records, excluded, settings)
}

/// Builds a cell report from finished replication records.
pub fn summarize_cell(
    cell: StudyCell,
    requested_replications: usize,
    records: Vec<ReplicationRecord>,
    excluded: Vec<ExcludedReplication>,
    settings: &StudySettings,
) -> CoverageReport {
    let p = cell.scenario.p();
    let mut coverage = Vec::new();
    for &method in &settings.methods {
        for &level in &settings.levels {
            coverage.push(coverage_summary(&records, p, method, level));
        }
    }
    let adjusted_alphas = if settings.needs(CiMethod::BootstrapCalibrated) {
        settings
            .levels
            .iter()
            .map(|&l| adjusted_alpha_summary(&records, p, l))
            .collect()
    } else {
        Vec::new()
    };
    CoverageReport {
        cell,
        requested_replications,
        replications: records.len(),
        excluded,
        coverage,
        splits: split_count_summary(&records, p),
        adjusted_alphas,
        bootstrap_failures: records.iter().map(|r| r.bootstrap_failures).sum(),
        records,
    }
}

/// Runs `replications` replications of every grid cell on a pool of
/// `parallelism` threads. Results do not depend on `parallelism`.
pub fn run_study(
    cells: &[StudyCell],
    replications: usize,
    settings: &StudySettings,
    master_seed: u64,
    parallelism: usize,
) -> Result<StudyReport> {
    if replications == 0 {
        return Err(TsvcError::Config("need at least one replication".into()));
    }
    for &level in &settings.levels {
        crate::ci::check_level(level)?;
    }
    if settings.methods.iter().any(|m| *m != CiMethod::Wald)
        && !settings.levels.is_empty()
        && settings.bootstrap_replicates == 0
    {
        return Err(TsvcError::Config("bootstrap methods need B >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| TsvcError::Config(format!("cannot start thread pool: {e}")))?;
    let reports = pool.install(|| {
        cells
            .iter()
            .enumerate()
            .map(|(i, cell)| run_cell(cell, i, replications, settings, master_seed))
            .collect()
    });
    Ok(StudyReport {
        master_seed,
        settings: settings.clone(),
        cells: reports,
    })
}
