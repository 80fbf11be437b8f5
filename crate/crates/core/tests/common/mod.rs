//! Shared generators, a brute-force split oracle and invariant checks used by
//! the integration suites and the acceptance runner.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use tsvc::ci::{bootstrap_estimate, percentile_interval, wald_ci, BootstrapRun};
use tsvc::io::{expand_discrete_hazard, SurvivalSchema, Table};
use tsvc::sim::{run_study, ScenarioId, StudyCell, StudySettings};
use tsvc::{
    fit_tsvc, grow_sequence, select_best_split, CovariateRole, Dataset, Family, ModelStructure,
    SplitRule, SplitSearch, TsvcConfig,
};

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random Gaussian data with a piecewise-linear signal. Column 1 (when
/// present) is rounded to one decimal so that modifiers carry ties.
pub fn random_gaussian(seed: u64, n: usize, p: usize) -> Dataset {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..p)
                .map(|k| {
                    let v: f64 = r.random_range(-1.0..1.0);
                    if k == 1 {
                        (v * 10.0).round() / 10.0
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect();
    let slope: f64 = r.random_range(-2.0..2.0);
    let y = rows
        .iter()
        .map(|row| {
            let modifier = row[p - 1];
            let effect = if modifier > 0.0 { slope } else { -slope };
            let noise: f64 = r.sample(StandardNormal);
            effect * row[0] + 0.5 * noise
        })
        .collect();
    Dataset::from_rows(y, &rows).unwrap()
}

/// Random binary-outcome data with a modified logit slope.
pub fn random_binomial(seed: u64, n: usize, p: usize) -> Dataset {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| r.random_range(-1.0..1.0)).collect())
        .collect();
    let y = rows
        .iter()
        .map(|row| {
            let eta = if row[p - 1] > 0.0 { 1.5 } else { -1.5 } * row[0];
            let prob = 1.0 / (1.0 + (-eta).exp());
            if r.random::<f64>() < prob {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Dataset::from_rows(y, &rows).unwrap()
}

/// Applies up to `splits` random splits, each at a data value that leaves
/// both children non-empty.
pub fn random_structure(
    seed: u64,
    x: &DMatrix<f64>,
    roles: &[CovariateRole],
    splits: usize,
) -> ModelStructure {
    let mut r = rng(seed);
    let p = roles.len();
    let mut structure = ModelStructure::no_splits(roles);
    let varying: Vec<usize> = (0..p)
        .filter(|&j| roles[j] == CovariateRole::Varying)
        .collect();
    if varying.is_empty() || p < 2 {
        return structure;
    }
    for _ in 0..splits {
        let j = varying[r.random_range(0..varying.len())];
        let k = loop {
            let k = r.random_range(0..p);
            if k != j {
                break k;
            }
        };
        let tree = &structure.trees[j];
        let leaf = r.random_range(0..tree.leaf_count());
        let leaves = tree.assign_rows(x);
        let mut values: Vec<f64> = (0..x.nrows())
            .filter(|&i| leaves[i] == leaf)
            .map(|i| x[(i, k)])
            .collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        if values.len() < 2 {
            continue;
        }
        let threshold = values[r.random_range(0..values.len() - 1)];
        let rule = SplitRule {
            target_covariate: j,
            modifier: k,
            threshold,
        };
        structure = structure.with_split(&rule, leaf).unwrap();
    }
    structure
}

/// Design built column by column from leaf memberships: intercept, then
/// `x_j * I(leaf m)` for each covariate with an effect.
pub fn leaf_columns(x: &DMatrix<f64>, structure: &ModelStructure) -> Vec<DVector<f64>> {
    let n = x.nrows();
    let mut cols = vec![DVector::from_element(n, 1.0)];
    for (j, tree) in structure.trees.iter().enumerate() {
        if !tree.role().has_effect() {
            continue;
        }
        let leaves = tree.assign_rows(x);
        for m in 0..tree.leaf_count() {
            cols.push(DVector::from_fn(n, |i, _| {
                if leaves[i] == m {
                    x[(i, j)]
                } else {
                    0.0
                }
            }));
        }
    }
    cols
}

/// Least-squares RSS through the normal equations; `None` when `X'X` is
/// not positive definite.
pub fn normal_equations_rss(cols: &[DVector<f64>], y: &DVector<f64>) -> Option<f64> {
    let x = DMatrix::from_columns(cols);
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * y;
    let chol = xtx.cholesky()?;
    let beta = chol.solve(&xty);
    let resid = y - &x * beta;
    Some(resid.norm_squared())
}

pub struct OracleCandidate {
    pub leaf: usize,
    pub rule: SplitRule,
    pub deviance: f64,
}

/// Every admissible candidate with its refitted RSS, in
/// `(covariate, leaf, modifier, threshold)` order.
pub fn enumerate_by_hand(
    dataset: &Dataset,
    structure: &ModelStructure,
    config: &TsvcConfig,
) -> Vec<OracleCandidate> {
    let x = dataset.covariates();
    let n = x.nrows();
    let y = DVector::from_column_slice(dataset.outcome());
    let base = leaf_columns(x, structure);
    let mut out = Vec::new();
    let mut vary = config.vary_set.clone();
    vary.sort_unstable();
    for j in vary {
        let tree = &structure.trees[j];
        let leaves = tree.assign_rows(x);
        let first_col = 1 + structure.trees[..j]
            .iter()
            .filter(|t| t.role().has_effect())
            .map(|t| t.leaf_count())
            .sum::<usize>();
        let mut modifiers = config.modifier_sets[j].clone();
        modifiers.sort_unstable();
        modifiers.dedup();
        for m in 0..tree.leaf_count() {
            let members: Vec<usize> = (0..n).filter(|&i| leaves[i] == m).collect();
            for &k in &modifiers {
                let mut values: Vec<f64> = members.iter().map(|&i| x[(i, k)]).collect();
                values.sort_by(f64::total_cmp);
                values.dedup();
                values.pop();
                for c in values {
                    let left = members.iter().filter(|&&i| x[(i, k)] <= c).count();
                    let right = members.len() - left;
                    if left < config.min_node_size || right < config.min_node_size {
                        continue;
                    }
                    let mut cols = base.clone();
                    let column = &base[first_col + m];
                    let low = DVector::from_fn(n, |i, _| {
                        if leaves[i] == m && x[(i, k)] <= c {
                            column[i]
                        } else {
                            0.0
                        }
                    });
                    let high = column - &low;
                    cols[first_col + m] = low;
                    cols.push(high);
                    if let Some(deviance) = normal_equations_rss(&cols, &y) {
                        out.push(OracleCandidate {
                            leaf: m,
                            rule: SplitRule {
                                target_covariate: j,
                                modifier: k,
                                threshold: c,
                            },
                            deviance,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Compares `select_best_split` with exhaustive enumeration. The chosen rule
/// must be the enumeration's first minimiser unless another candidate is
/// within `tol` of it.
pub fn check_split_against_oracle(
    dataset: &Dataset,
    structure: &ModelStructure,
    config: &TsvcConfig,
    tol: f64,
) -> Check {
    let oracle = enumerate_by_hand(dataset, structure, config);
    let chosen = select_best_split(dataset, structure, config).map_err(|e| e.to_string())?;
    let Some(chosen) = chosen else {
        return if oracle.is_empty() {
            Ok(())
        } else {
            Err(format!(
                "no split chosen, {} candidates exist",
                oracle.len()
            ))
        };
    };
    let best = oracle
        .iter()
        .fold(None::<&OracleCandidate>, |acc, c| match acc {
            Some(a) if a.deviance <= c.deviance => Some(a),
            _ => Some(c),
        })
        .ok_or("split chosen but no candidate exists")?;
    let scale = 1.0 + best.deviance.abs();
    if (chosen.fit.deviance - best.deviance).abs() > tol * scale {
        return Err(format!(
            "deviance {} vs oracle {}",
            chosen.fit.deviance, best.deviance
        ));
    }
    let same = chosen.leaf == best.leaf && chosen.rule == best.rule;
    if !same {
        let own = oracle
            .iter()
            .find(|c| c.leaf == chosen.leaf && c.rule == chosen.rule)
            .ok_or_else(|| format!("chosen rule {:?} is not a candidate", chosen.rule))?;
        if (own.deviance - best.deviance).abs() > tol * scale {
            return Err(format!(
                "rule {:?} (leaf {}) vs oracle {:?} (leaf {})",
                chosen.rule, chosen.leaf, best.rule, best.leaf
            ));
        }
    }
    Ok(())
}

/// One random oracle case; `seed` fixes data, structure and settings.
/// Returns `false` when the random starting structure cannot be fitted and
/// the case was skipped.
pub fn oracle_case(seed: u64, search: SplitSearch) -> Result<bool, String> {
    let mut r = rng(seed ^ 0x5eed);
    let n = r.random_range(10..=40);
    let p = r.random_range(2..=3);
    let dataset = random_gaussian(seed, n, p);
    let mut config =
        TsvcConfig::new(p, Family::GaussianIdentity).with_min_node_size(r.random_range(1..=4));
    config.split_search = search;
    let splits = r.random_range(0..=2);
    let structure = random_structure(seed, dataset.covariates(), &config.roles(), splits);
    if tsvc::fit_structure(&dataset, &structure, &config).is_err() {
        return Ok(false);
    }
    check_split_against_oracle(&dataset, &structure, &config, 1e-10)
        .map(|()| true)
        .map_err(|e| format!("seed {seed}: {e}"))
}

// Invariants.

/// Every row satisfies the path conditions of exactly one leaf, and that
/// leaf is the one `assign_rows` reports.
pub fn partition_exhaustive(seed: u64) -> Check {
    let d = random_gaussian(seed, 60, 3);
    let structure = random_structure(seed, d.covariates(), &[CovariateRole::Varying; 3], 6);
    let x = d.covariates();
    for tree in &structure.trees {
        let paths = tree.leaf_paths();
        let assigned = tree.assign_rows(x);
        for i in 0..x.nrows() {
            let hits: Vec<usize> = paths
                .iter()
                .enumerate()
                .filter(|(_, path)| {
                    path.iter().all(|c| {
                        let v = x[(i, c.modifier)];
                        if c.at_most {
                            v <= c.threshold
                        } else {
                            v > c.threshold
                        }
                    })
                })
                .map(|(m, _)| m)
                .collect();
            if hits != [assigned[i]] {
                return Err(format!("row {i}: paths {hits:?}, assigned {}", assigned[i]));
            }
        }
    }
    Ok(())
}

fn sequence_for(seed: u64, family: Family) -> Result<Vec<tsvc::TsvcModel>, String> {
    let d = match family {
        Family::GaussianIdentity => random_gaussian(seed, 80, 3),
        Family::BinomialLogit => random_binomial(seed, 120, 2),
    };
    let config = TsvcConfig::new(d.p(), family).with_max_splits(4);
    grow_sequence(&d, &config).map_err(|e| e.to_string())
}

/// Deviance never increases along the grown sequence.
pub fn deviance_monotone(seed: u64, family: Family) -> Check {
    let models = sequence_for(seed, family)?;
    for w in models.windows(2) {
        if !(w[0].fit.converged && w[1].fit.converged) {
            continue;
        }
        let (a, b) = (w[0].fit.deviance, w[1].fit.deviance);
        if b > a + 1e-8 * (1.0 + a.abs()) {
            return Err(format!("deviance rose from {a} to {b}"));
        }
    }
    Ok(())
}

/// Each model of the sequence refines the previous one by exactly one split.
pub fn sequence_nested(seed: u64, family: Family) -> Check {
    let models = sequence_for(seed, family)?;
    let d = match family {
        Family::GaussianIdentity => random_gaussian(seed, 80, 3),
        Family::BinomialLogit => random_binomial(seed, 120, 2),
    };
    let x = d.covariates();
    for (s, w) in models.windows(2).enumerate() {
        if w[1].structure.split_count() != w[0].structure.split_count() + 1 {
            return Err(format!("model {} does not add one split", s + 1));
        }
        for (coarse, fine) in w[0].structure.trees.iter().zip(&w[1].structure.trees) {
            let a = coarse.assign_rows(x);
            let b = fine.assign_rows(x);
            let mut parent = vec![None; fine.leaf_count()];
            for i in 0..x.nrows() {
                match parent[b[i]] {
                    None => parent[b[i]] = Some(a[i]),
                    Some(m) if m != a[i] => {
                        return Err(format!("leaf {} straddles two coarser leaves", b[i]))
                    }
                    _ => {}
                }
            }
        }
    }
    Ok(())
}

/// Percentile intervals of a constant sample collapse to the constant.
pub fn percentile_of_constant(value: f64, b: usize, level: f64) -> Check {
    let (lo, hi) = percentile_interval(&vec![value; b], level).map_err(|e| e.to_string())?;
    if lo == value && hi == value {
        Ok(())
    } else {
        Err(format!("({lo}, {hi}) for constant {value}"))
    }
}

/// Averaging a model's own coefficient function over its own partitions
/// gives back its coefficients.
pub fn bootstrap_estimate_identity(seed: u64) -> Check {
    let d = random_gaussian(seed, 80, 3);
    let m =
        fit_tsvc(&d, &TsvcConfig::new(3, Family::GaussianIdentity)).map_err(|e| e.to_string())?;
    let est = bootstrap_estimate(&m, &m, &d).map_err(|e| e.to_string())?;
    for (a, b) in est.iter().flatten().zip(m.coefficients.iter().flatten()) {
        if (a - b).abs() > 1e-12 * (1.0 + b.abs()) {
            return Err(format!("{a} vs {b}"));
        }
    }
    Ok(())
}

/// Wald intervals are symmetric about the estimate.
pub fn wald_symmetric(seed: u64, level: f64) -> Check {
    let d = random_gaussian(seed, 80, 3);
    let m =
        fit_tsvc(&d, &TsvcConfig::new(3, Family::GaussianIdentity)).map_err(|e| e.to_string())?;
    for ci in wald_ci(&m, level).map_err(|e| e.to_string())? {
        let (below, above) = (ci.estimate - ci.lower, ci.upper - ci.estimate);
        if (below - above).abs() > 1e-12 * (1.0 + ci.estimate.abs() + below.abs()) {
            return Err(format!("{below} below vs {above} above"));
        }
    }
    Ok(())
}

/// Bootstrap replicates and study results are identical for 1 and several
/// worker threads.
pub fn deterministic_across_threads(seed: u64) -> Check {
    let d = random_gaussian(seed, 60, 2);
    let config = TsvcConfig::new(2, Family::GaussianIdentity).with_max_splits(2);
    let m = fit_tsvc(&d, &config).map_err(|e| e.to_string())?;
    let boot = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| BootstrapRun::parametric(&m, &d, &config, 40, seed))
            .map_err(|e| e.to_string())
    };
    if boot(1)? != boot(4)? {
        return Err("bootstrap differs between 1 and 4 threads".into());
    }
    let settings = StudySettings {
        methods: vec![tsvc::ci::CiMethod::Wald],
        levels: vec![0.95],
        bootstrap_replicates: 0,
    };
    let cells = [StudyCell {
        scenario: ScenarioId::Varying,
        n: 80,
        sigma: 1.0,
    }];
    let study = |threads| {
        run_study(&cells, 6, &settings, seed, threads)
            .map(|r| r.cells[0].records.clone())
            .map_err(|e| e.to_string())
    };
    if study(1)? != study(3)? {
        return Err("study records differ between 1 and 3 threads".into());
    }
    Ok(())
}

/// Survival table with `times` and `events` plus one covariate.
pub fn survival_table(times: &[usize], events: &[u8]) -> Table {
    let mut text = String::from("t,d,z\n");
    for (i, (t, e)) in times.iter().zip(events).enumerate() {
        text.push_str(&format!("{t},{e},{}\n", i as f64 * 0.5));
    }
    Table::from_reader(text.as_bytes()).unwrap()
}

/// Expanded row count equals the sum of the observed times.
pub fn hazard_row_count(times: &[usize], events: &[u8]) -> Check {
    let schema = SurvivalSchema {
        time_column: "t".into(),
        event_column: "d".into(),
    };
    let e = expand_discrete_hazard(&survival_table(times, events), &schema)
        .map_err(|e| e.to_string())?;
    let expected: usize = times.iter().sum();
    if e.dataset.n() == expected {
        Ok(())
    } else {
        Err(format!("{} rows, expected {expected}", e.dataset.n()))
    }
}

/// Five subjects `(time, event, z)` and their person-period rows written out
/// by hand as `(z, period, period_2, period_3, outcome, subject)`.
pub const FIVE_SUBJECTS: &str = "time,event,z\n2,1,0.5\n1,0,1.0\n3,0,-0.5\n3,1,2.0\n1,1,0.0\n";

pub const FIVE_SUBJECTS_EXPANDED: [[f64; 6]; 10] = [
    [0.5, 1.0, 0.0, 0.0, 0.0, 0.0],
    [0.5, 2.0, 1.0, 0.0, 1.0, 0.0],
    [1.0, 1.0, 0.0, 0.0, 0.0, 1.0],
    [-0.5, 1.0, 0.0, 0.0, 0.0, 2.0],
    [-0.5, 2.0, 1.0, 0.0, 0.0, 2.0],
    [-0.5, 3.0, 0.0, 1.0, 0.0, 2.0],
    [2.0, 1.0, 0.0, 0.0, 0.0, 3.0],
    [2.0, 2.0, 1.0, 0.0, 0.0, 3.0],
    [2.0, 3.0, 0.0, 1.0, 1.0, 3.0],
    [0.0, 1.0, 0.0, 0.0, 1.0, 4.0],
];

/// Expands [`FIVE_SUBJECTS`] and compares with the hand expansion.
pub fn five_subject_expansion() -> Check {
    let table = Table::from_reader(FIVE_SUBJECTS.as_bytes()).map_err(|e| e.to_string())?;
    let schema = SurvivalSchema {
        time_column: "time".into(),
        event_column: "event".into(),
    };
    let e = expand_discrete_hazard(&table, &schema).map_err(|e| e.to_string())?;
    let names = e.dataset.names();
    if names != ["z", "time", "time_2", "time_3"] {
        return Err(format!("columns {names:?}"));
    }
    if e.dataset.n() != FIVE_SUBJECTS_EXPANDED.len() {
        return Err(format!("{} rows", e.dataset.n()));
    }
    for (i, want) in FIVE_SUBJECTS_EXPANDED.iter().enumerate() {
        let got = e.dataset.row(i);
        if got[..] != want[..4]
            || e.dataset.outcome()[i] != want[4]
            || e.subject[i] as f64 != want[5]
        {
            return Err(format!(
                "row {i}: {got:?} y={} subject={} vs {want:?}",
                e.dataset.outcome()[i],
                e.subject[i]
            ));
        }
    }
    Ok(())
}
