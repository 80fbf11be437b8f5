mod args;
mod settings;

use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::Parser;
use tsvc::ci::{wald_ci, BootstrapRun, CalibrationBootstrap, CiMethod, CoefficientCi};
use tsvc::io::{
    ci_rows, ci_table_csv, deserialize_model, serialize_model, study_report_csv, study_report_json,
    write_atomic, CiDocument, CI_SCHEMA_VERSION,
};
use tsvc::rng::derive_seed;
use tsvc::sim::{run_study, ScenarioId, StudyCell, StudySettings};
use tsvc::{fit_tsvc, Dataset, TsvcConfig, TsvcError, TsvcModel};

use args::{CiArgs, Cli, Command, FitArgs, ModelArgs, SimulateArgs};
use settings::{FileConfig, ModelSettings};

const DEFAULT_CI_REPLICATES: usize = 1000;
const DEFAULT_STUDY_REPLICATIONS: usize = 200;
const DEFAULT_STUDY_REPLICATES: usize = 200;

/// Exit status 1: the invocation itself is wrong.
#[derive(Debug)]
struct UsageError(anyhow::Error);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(r: anyhow::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| UsageError(e).into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Fit(a) => fit(a),
        Command::Ci(a) => ci(a),
        Command::Simulate(a) => simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let is_usage = e.downcast_ref::<UsageError>().is_some()
                || matches!(e.downcast_ref::<TsvcError>(), Some(TsvcError::Config(_)));
            ExitCode::from(if is_usage { 1 } else { 2 })
        }
    }
}

fn seed_or_clock(seed: Option<u64>) -> u64 {
    let seed = seed.unwrap_or_else(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0)
    });
    println!("seed: {seed}");
    seed
}

struct Prepared {
    dataset: Dataset,
    config: TsvcConfig,
    seed: u64,
}

fn prepare(args: &ModelArgs) -> anyhow::Result<(FileConfig, ModelSettings, Prepared)> {
    let file = usage(FileConfig::load(args.config.as_deref()))?;
    let settings = usage(ModelSettings::merge(args, &file))?;
    let seed = seed_or_clock(args.seed.or(file.seed));
    let (dataset, base) = settings.load(&args.data)?;
    let config = usage(settings.config(&dataset, base))?;
    Ok((
        file,
        settings,
        Prepared {
            dataset,
            config,
            seed,
        },
    ))
}

fn fit(args: FitArgs) -> anyhow::Result<()> {
    let (_, _, prep) = prepare(&args.model)?;
    let model = fit_tsvc(&prep.dataset, &prep.config).context("fitting failed")?;
    let doc = serialize_model(&model, prep.dataset.outcome_name())?;
    let rendering = model.render_tree().join("\n") + "\n";
    write_atomic(&args.output, doc.as_bytes())?;
    if let Some(path) = &args.tree {
        write_atomic(path, rendering.as_bytes())?;
    }
    println!(
        "splits: {}  BIC: {}  converged: {}",
        model.splits_performed, model.bic, model.fit.converged
    );
    print!("{rendering}");
    Ok(())
}

fn load_model(path: &Path, dataset: &Dataset) -> anyhow::Result<TsvcModel> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read model {}", path.display()))?;
    let model = deserialize_model(&text)?;
    if model.covariate_names != dataset.names() {
        bail!(
            "model covariates {:?} do not match data columns {:?}",
            model.covariate_names,
            dataset.names()
        );
    }
    if model.nobs() != dataset.n() {
        bail!(
            "model was fitted on {} rows, data has {}",
            model.nobs(),
            dataset.n()
        );
    }
    Ok(model)
}

fn parse_methods(
    names: Option<Vec<String>>,
    default: &[CiMethod],
) -> anyhow::Result<Vec<CiMethod>> {
    match names {
        None => Ok(default.to_vec()),
        Some(v) => usage(
            v.iter()
                .map(|s| s.trim().parse::<CiMethod>().map_err(anyhow::Error::from))
                .collect(),
        ),
    }
}

fn check_levels(levels: &[f64]) -> anyhow::Result<()> {
    if levels.is_empty() {
        return usage(Err(anyhow::anyhow!("at least one level is required")));
    }
    for &l in levels {
        if !(l > 0.0 && l < 1.0) {
            return usage(Err(anyhow::anyhow!("level {l} must lie in (0, 1)")));
        }
    }
    Ok(())
}

fn ci(args: CiArgs) -> anyhow::Result<()> {
    let (file, _, prep) = prepare(&args.model)?;
    let methods = parse_methods(args.methods.or(file.methods.clone()), &[CiMethod::Wald])?;
    let levels = args
        .levels
        .or(file.levels.clone())
        .unwrap_or_else(|| vec![0.95]);
    check_levels(&levels)?;
    let b = args.b.or(file.b).unwrap_or(DEFAULT_CI_REPLICATES);
    if b == 0 {
        return usage(Err(anyhow::anyhow!("--B must be at least 1")));
    }

    let (model, config) = match &args.model_file {
        Some(path) => {
            let model = load_model(path, &prep.dataset)?;
            let config = model.config.clone();
            (model, config)
        }
        None => {
            let model = fit_tsvc(&prep.dataset, &prep.config).context("fitting failed")?;
            (model, prep.config.clone())
        }
    };

    let mut intervals: Vec<CoefficientCi> = Vec::new();
    let mut adjusted: Vec<(f64, Vec<Option<f64>>)> = Vec::new();
    let mut failures = 0;
    let mut used_bootstrap = false;
    for method in &methods {
        match method {
            CiMethod::Wald => {
                for &l in &levels {
                    intervals.extend(wald_ci(&model, l)?);
                }
            }
            CiMethod::ParametricPercentile => {
                used_bootstrap = true;
                let run = BootstrapRun::parametric(
                    &model,
                    &prep.dataset,
                    &config,
                    b,
                    derive_seed(prep.seed, 1, 0),
                )?;
                failures += run.failed_fits;
                for &l in &levels {
                    intervals.extend(run.percentile_cis(&model, l)?);
                }
            }
            CiMethod::BootstrapCalibrated => {
                used_bootstrap = true;
                let run = CalibrationBootstrap::run(
                    &prep.dataset,
                    &config,
                    b,
                    derive_seed(prep.seed, 2, 0),
                )?;
                failures += run.failed_fits;
                for &l in &levels {
                    let cal = run.calibrated_cis(&model, l)?;
                    intervals.extend(cal.intervals);
                    adjusted.push((l, cal.adjusted_alphas));
                }
            }
        }
    }

    let rows = ci_rows(&model, &intervals, |ci| {
        if ci.method != CiMethod::BootstrapCalibrated {
            return None;
        }
        adjusted
            .iter()
            .find(|(l, _)| (*l - ci.level).abs() < 1e-12)
            .and_then(|(_, a)| a[ci.covariate])
    });
    let csv = ci_table_csv(&rows)?;
    let json = match &args.json {
        Some(_) => Some(serde_json::to_string_pretty(&CiDocument {
            schema_version: CI_SCHEMA_VERSION.to_string(),
            seed: prep.seed,
            bootstrap_replicates: used_bootstrap.then_some(b),
            bootstrap_failures: failures,
            rows,
        })?),
        None => None,
    };
    write_atomic(&args.output, &csv)?;
    if let (Some(path), Some(text)) = (&args.json, json) {
        write_atomic(path, text.as_bytes())?;
    }
    if failures > 0 {
        println!("bootstrap fits that failed or did not converge: {failures}");
    }
    print!("{}", String::from_utf8_lossy(&csv));
    Ok(())
}

fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let file = usage(FileConfig::load(args.config.as_deref()))?;
    let seed = seed_or_clock(args.seed.or(file.seed));
    let scenarios: Vec<ScenarioId> = usage(
        args.scenario
            .or(file.scenario.clone())
            .unwrap_or_else(|| vec!["linear".into()])
            .iter()
            .map(|s| s.trim().parse::<ScenarioId>().map_err(anyhow::Error::from))
            .collect(),
    )?;
    let ns = args.n.or(file.n.clone()).unwrap_or_else(|| vec![200]);
    let sigmas = args
        .sigma
        .or(file.sigma.clone())
        .unwrap_or_else(|| vec![1.0]);
    let replications = args.r.or(file.r).unwrap_or(DEFAULT_STUDY_REPLICATIONS);
    let b = args.b.or(file.b).unwrap_or(DEFAULT_STUDY_REPLICATES);
    let methods = parse_methods(args.methods.or(file.methods.clone()), &CiMethod::ALL)?;
    let levels = args
        .levels
        .or(file.levels.clone())
        .unwrap_or_else(|| vec![0.95]);
    check_levels(&levels)?;
    let threads = args
        .threads
        .or(file.threads)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    let mut cells = Vec::new();
    for &scenario in &scenarios {
        for &n in &ns {
            for &sigma in &sigmas {
                cells.push(StudyCell { scenario, n, sigma });
            }
        }
    }
    let settings = StudySettings {
        methods,
        levels,
        bootstrap_replicates: b,
    };
    let report = run_study(&cells, replications, &settings, seed, threads)?;
    let csv = study_report_csv(&report)?;
    let json = study_report_json(&report)?;
    write_atomic(&args.output, &csv)?;
    if let Some(path) = &args.json {
        write_atomic(path, json.as_bytes())?;
    }
    for cell in &report.cells {
        if !cell.excluded.is_empty() {
            println!(
                "{} n={} sigma={}: {} replications excluded",
                cell.cell.scenario,
                cell.cell.n,
                cell.cell.sigma,
                cell.excluded.len()
            );
        }
    }
    print!("{}", String::from_utf8_lossy(&csv));
    Ok(())
}
