//! Tree building: design construction, candidate enumeration, deviance-based
//! split selection, growth of the nested model sequence and BIC pruning.
//!
//! Every candidate split refits all coefficients on all observations. For
//! the Gaussian family this refit has a closed form: splitting column
//! `x_j * I(leaf)` into its `<= c` and `> c` parts adds the single column
//! `z = x_j * I(leaf, x_k <= c)` to the column space, so
//! `RSS_new = RSS - (r'z)^2 / (z'z - |Q'z|^2)` with `r` the current residual
//! and `Q` an orthonormal basis of the current design. Scanning thresholds in
//! sorted order turns `r'z`, `z'z` and `Q'z` into running sums.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::config::{SplitSearch, TsvcConfig};
use crate::data::Dataset;
use crate::error::{Result, TsvcError};
use crate::glm::{fit_glm, fit_glm_from, Family, GlmFit};
use crate::linalg::PivotedQr;
use crate::model::TsvcModel;
use crate::tree::{ModelStructure, SplitRule};

/// Projected squared norm below this fraction of `z'z` marks a candidate
/// column as (numerically) inside the current column space.
const UPDATE_DEGENERACY: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub leaf: usize,
    pub rule: SplitRule,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SplitDiagnostics {
    pub candidates: usize,
    pub rank_deficient: usize,
    pub not_converged: usize,
}

#[derive(Debug, Clone)]
pub struct SplitSelection {
    pub rule: SplitRule,
    pub leaf: usize,
    pub structure: ModelStructure,
    pub fit: GlmFit,
    pub diagnostics: SplitDiagnostics,
}

/// `-2 ln L + s ln n`; the penalty counts splits only.
pub fn bic(log_likelihood: f64, s: usize, n: usize) -> f64 {
    -2.0 * log_likelihood + s as f64 * (n as f64).ln()
}

/// Intercept column followed by `x_j * I(row in leaf m)` for each covariate
/// with an effect and each of its leaves.
pub fn build_design(dataset: &Dataset, structure: &ModelStructure) -> Result<DMatrix<f64>> {
    design_matrix(dataset.covariates(), structure)
}

/// [`build_design`] for a bare covariate matrix.
pub fn design_matrix(x: &DMatrix<f64>, structure: &ModelStructure) -> Result<DMatrix<f64>> {
    let assignments = leaf_assignments(x, structure)?;
    Ok(design_from_assignments(x, structure, &assignments))
}

fn leaf_assignments(x: &DMatrix<f64>, structure: &ModelStructure) -> Result<Vec<Vec<usize>>> {
    if structure.p() != x.ncols() {
        return Err(TsvcError::InvalidInput(format!(
            "structure has {} covariates, data has {}",
            structure.p(),
            x.ncols()
        )));
    }
    let mut out = Vec::with_capacity(structure.p());
    for (j, tree) in structure.trees.iter().enumerate() {
        let leaves = tree.assign_rows(x);
        if tree.role().has_effect() {
            let mut counts = vec![0usize; tree.leaf_count()];
            for &m in &leaves {
                counts[m] += 1;
            }
            if let Some(m) = counts.iter().position(|&c| c == 0) {
                return Err(TsvcError::DegenerateDesign {
                    covariate: j,
                    leaf: m,
                });
            }
        }
        out.push(leaves);
    }
    Ok(out)
}

fn design_from_assignments(
    x: &DMatrix<f64>,
    structure: &ModelStructure,
    assignments: &[Vec<usize>],
) -> DMatrix<f64> {
    let n = x.nrows();
    let mut design = DMatrix::zeros(n, structure.ncols());
    design.column_mut(0).fill(1.0);
    for (j, offset) in structure.column_offsets().into_iter().enumerate() {
        if let Some(at) = offset {
            for i in 0..n {
                design[(i, at + assignments[j][i])] = x[(i, j)];
            }
        }
    }
    design
}

/// Rows of one leaf sorted by one modifier, with the admissible cut points.
struct LeafScan {
    candidate_base: (usize, usize, usize),
    rows: Vec<usize>,
    /// `(left_len, threshold)` for every admissible cut, ascending.
    cuts: Vec<(usize, f64)>,
}

fn leaf_scans(
    dataset: &Dataset,
    structure: &ModelStructure,
    config: &TsvcConfig,
    assignments: &[Vec<usize>],
) -> Vec<LeafScan> {
    let x = dataset.covariates();
    let min_node = config.min_node_size;
    let mut scans = Vec::new();
    let mut vary = config.vary_set.clone();
    vary.sort_unstable();
    for j in vary {
        let tree = &structure.trees[j];
        let mut leaf_rows = vec![Vec::new(); tree.leaf_count()];
        for (i, &m) in assignments[j].iter().enumerate() {
            leaf_rows[m].push(i);
        }
        for (m, members) in leaf_rows.iter().enumerate() {
            if members.len() < 2 * min_node {
                continue;
            }
            for k in config.modifiers_of(j) {
                let col = x.column(k);
                let mut rows = members.clone();
                rows.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
                let len = rows.len();
                let mut cuts = Vec::new();
                for pos in 0..len - 1 {
                    let here = col[rows[pos]];
                    if col[rows[pos + 1]] > here {
                        let left = pos + 1;
                        if left >= min_node && len - left >= min_node {
                            cuts.push((left, here));
                        }
                    }
                }
                if !cuts.is_empty() {
                    scans.push(LeafScan {
                        candidate_base: (j, m, k),
                        rows,
                        cuts,
                    });
                }
            }
        }
    }
    scans
}

fn scan_candidates(scan: &LeafScan) -> impl Iterator<Item = Candidate> + '_ {
    let (j, m, k) = scan.candidate_base;
    scan.cuts.iter().map(move |&(_, c)| Candidate {
        leaf: m,
        rule: SplitRule {
            target_covariate: j,
            modifier: k,
            threshold: c,
        },
    })
}

/// Every admissible split of the current structure, ordered by
/// `(j, leaf, k, c)`.
pub fn enumerate_candidate_splits(
    dataset: &Dataset,
    structure: &ModelStructure,
    config: &TsvcConfig,
) -> Result<Vec<Candidate>> {
    config.validate(dataset.p())?;
    let assignments = leaf_assignments(dataset.covariates(), structure)?;
    Ok(leaf_scans(dataset, structure, config, &assignments)
        .iter()
        .flat_map(scan_candidates)
        .collect())
}

/// Fits the structure as given (no tree search).
pub fn fit_structure(
    dataset: &Dataset,
    structure: &ModelStructure,
    config: &TsvcConfig,
) -> Result<TsvcModel> {
    let design = build_design(dataset, structure)?;
    let fit = fit_glm(&design, dataset.outcome(), config.family)?;
    Ok(TsvcModel::from_fit(
        structure.clone(),
        fit,
        dataset.names(),
        config.clone(),
    ))
}

/// The candidate with the smallest refitted deviance, ties going to the
/// earlier candidate in enumeration order. `None` when nothing is admissible.
pub fn select_best_split(
    dataset: &Dataset,
    structure: &ModelStructure,
    config: &TsvcConfig,
) -> Result<Option<SplitSelection>> {
    config.validate(dataset.p())?;
    let assignments = leaf_assignments(dataset.covariates(), structure)?;
    let design = design_from_assignments(dataset.covariates(), structure, &assignments);
    let fit = fit_glm(&design, dataset.outcome(), config.family)?;
    best_split(dataset, structure, config, &assignments, &design, &fit)
}

fn best_split(
    dataset: &Dataset,
    structure: &ModelStructure,
    config: &TsvcConfig,
    assignments: &[Vec<usize>],
    design: &DMatrix<f64>,
    fit: &GlmFit,
) -> Result<Option<SplitSelection>> {
    let scans = leaf_scans(dataset, structure, config, assignments);
    let candidates: Vec<Candidate> = scans.iter().flat_map(scan_candidates).collect();
    if candidates.is_empty() {
        return Ok(None);
    }
    let mut diagnostics = SplitDiagnostics {
        candidates: candidates.len(),
        ..Default::default()
    };

    let use_update =
        config.family == Family::GaussianIdentity && config.split_search == SplitSearch::Auto;
    let scores: Vec<Option<f64>> = if use_update {
        gaussian_update_scores(dataset, design, fit, &scans)
    } else {
        refit_scores(
            dataset,
            structure,
            config,
            design,
            fit,
            &candidates,
            &mut diagnostics,
        )
    };

    let mut order: Vec<usize> = (0..candidates.len())
        .filter(|&i| scores[i].is_some())
        .collect();
    diagnostics.rank_deficient += candidates.len() - order.len() - diagnostics.not_converged;
    order.sort_by(|&a, &b| {
        scores[a]
            .unwrap()
            .total_cmp(&scores[b].unwrap())
            .then(a.cmp(&b))
    });

    // The winner is refitted from scratch; fall through to the runner-up if
    // the exact refit disagrees with the score about admissibility.
    for idx in order {
        let cand = candidates[idx];
        let next = structure.with_split(&cand.rule, cand.leaf)?;
        let next_design = match build_design(dataset, &next) {
            Ok(d) => d,
            Err(TsvcError::DegenerateDesign { .. }) => continue,
            Err(e) => return Err(e),
        };
        let start = split_start(fit, structure, &cand);
        match fit_glm_from(&next_design, dataset.outcome(), config.family, Some(&start)) {
            Ok(next_fit) => {
                if config.family == Family::BinomialLogit && !next_fit.converged {
                    continue;
                }
                return Ok(Some(SplitSelection {
                    rule: cand.rule,
                    leaf: cand.leaf,
                    structure: next,
                    fit: next_fit,
                    diagnostics,
                }));
            }
            Err(TsvcError::RankDeficient { .. }) => {
                diagnostics.rank_deficient += 1;
                continue;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// Exact post-split RSS for each candidate via running sums; `None` marks a
/// candidate column inside the current span.
fn gaussian_update_scores(
    dataset: &Dataset,
    design: &DMatrix<f64>,
    fit: &GlmFit,
    scans: &[LeafScan],
) -> Vec<Option<f64>> {
    let n = dataset.n();
    let q = design.ncols();
    let qmat = PivotedQr::new(design.clone()).thin_q();
    // Row-major copy for contiguous row access.
    let mut qrows = vec![0.0; n * q];
    for i in 0..n {
        for c in 0..q {
            qrows[i * q + c] = qmat[(i, c)];
        }
    }
    let y = dataset.outcome();
    let resid: Vec<f64> = y
        .iter()
        .zip(&fit.linear_predictor)
        .map(|(a, b)| a - b)
        .collect();
    let rss = fit.deviance;
    let x = dataset.covariates();

    let mut out = Vec::new();
    let mut u = vec![0.0; q];
    for scan in scans {
        let j = scan.candidate_base.0;
        let xj = x.column(j);
        u.iter_mut().for_each(|v| *v = 0.0);
        let mut rz = 0.0;
        let mut zz = 0.0;
        let mut added = 0;
        for &(left, _) in &scan.cuts {
            while added < left {
                let i = scan.rows[added];
                let xij = xj[i];
                rz += resid[i] * xij;
                zz += xij * xij;
                let qi = &qrows[i * q..(i + 1) * q];
                for (uc, qc) in u.iter_mut().zip(qi) {
                    *uc += qc * xij;
                }
                added += 1;
            }
            let proj: f64 = u.iter().map(|v| v * v).sum();
            let denom = zz - proj;
            if zz > 0.0 && denom > UPDATE_DEGENERACY * zz {
                out.push(Some((rss - rz * rz / denom).max(0.0)));
            } else {
                out.push(None);
            }
        }
    }
    out
}

/// Coefficients of the current fit expanded to the candidate's column
/// layout (the split leaf's coefficient duplicated).
fn split_start(fit: &GlmFit, structure: &ModelStructure, cand: &Candidate) -> Vec<f64> {
    let offsets = structure.column_offsets();
    let col = offsets[cand.rule.target_covariate].expect("split target has an effect") + cand.leaf;
    let mut start = fit.coefficients.clone();
    start.insert(col + 1, fit.coefficients[col]);
    start
}

fn candidate_design(
    dataset: &Dataset,
    structure: &ModelStructure,
    design: &DMatrix<f64>,
    cand: &Candidate,
) -> DMatrix<f64> {
    let offsets = structure.column_offsets();
    let col = offsets[cand.rule.target_covariate].expect("split target has an effect") + cand.leaf;
    let k = cand.rule.modifier;
    let c = cand.rule.threshold;
    let mut next = design.clone().insert_column(col + 1, 0.0);
    for i in 0..dataset.n() {
        if dataset.value(i, k) > c {
            next[(i, col + 1)] = next[(i, col)];
            next[(i, col)] = 0.0;
        }
    }
    next
}

fn refit_scores(
    dataset: &Dataset,
    structure: &ModelStructure,
    config: &TsvcConfig,
    design: &DMatrix<f64>,
    fit: &GlmFit,
    candidates: &[Candidate],
    diagnostics: &mut SplitDiagnostics,
) -> Vec<Option<f64>> {
    let evaluate = |cand: &Candidate| -> (Option<f64>, bool) {
        let next = candidate_design(dataset, structure, design, cand);
        let start = split_start(fit, structure, cand);
        match fit_glm_from(&next, dataset.outcome(), config.family, Some(&start)) {
            Ok(f) if f.converged => (Some(f.deviance), false),
            Ok(_) => (None, true),
            Err(_) => (None, false),
        }
    };
    let results: Vec<(Option<f64>, bool)> = if candidates.len() >= 64 {
        candidates.par_iter().map(evaluate).collect()
    } else {
        candidates.iter().map(evaluate).collect()
    };
    diagnostics.not_converged = results.iter().filter(|r| r.1).count();
    results.into_iter().map(|r| r.0).collect()
}

/// Nested sequence `model[0..=S]`: the no-split GLM followed by one best
/// split per step, stopping early when no admissible split remains.
pub fn grow_sequence(dataset: &Dataset, config: &TsvcConfig) -> Result<Vec<TsvcModel>> {
    config.validate(dataset.p())?;
    dataset.validate_for(config.family)?;
    let names = dataset.names();
    let mut structure = ModelStructure::no_splits(&config.roles());
    let design = build_design(dataset, &structure)?;
    let mut fit = fit_glm(&design, dataset.outcome(), config.family)?;
    let mut models = vec![TsvcModel::from_fit(
        structure.clone(),
        fit.clone(),
        names.clone(),
        config.clone(),
    )];
    for _ in 0..config.max_splits {
        let assignments = leaf_assignments(dataset.covariates(), &structure)?;
        let design = design_from_assignments(dataset.covariates(), &structure, &assignments);
        let Some(sel) = best_split(dataset, &structure, config, &assignments, &design, &fit)?
        else {
            break;
        };
        structure = sel.structure;
        fit = sel.fit;
        models.push(TsvcModel::from_fit(
            structure.clone(),
            fit.clone(),
            names.clone(),
            config.clone(),
        ));
    }
    Ok(models)
}

/// Index of the BIC-minimal model, ties to the smaller split count.
pub fn select_by_bic(models: &[TsvcModel]) -> usize {
    let mut best = 0;
    for (s, m) in models.iter().enumerate().skip(1) {
        if m.bic < models[best].bic {
            best = s;
        }
    }
    best
}

/// Grows the sequence and returns its BIC-minimal member.
pub fn fit_tsvc(dataset: &Dataset, config: &TsvcConfig) -> Result<TsvcModel> {
    let mut models = grow_sequence(dataset, config)?;
    let best = select_by_bic(&models);
    Ok(models.swap_remove(best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{CovariateRole, PartitionTree};
    use approx::assert_relative_eq;

    fn gaussian(p: usize) -> TsvcConfig {
        TsvcConfig::new(p, Family::GaussianIdentity)
    }

    fn scenario_two_structure() -> ModelStructure {
        let mut x1 = PartitionTree::single_leaf(0, CovariateRole::Varying);
        x1.split_leaf(0, 1, 0.5).unwrap();
        x1.split_leaf(0, 2, 0.0).unwrap();
        ModelStructure {
            trees: vec![
                x1,
                PartitionTree::single_leaf(1, CovariateRole::Varying),
                PartitionTree::single_leaf(2, CovariateRole::Varying),
            ],
        }
    }

    fn small_dataset(n: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.37).sin() * 2.0, (t * 1.3).cos(), (i % 2) as f64]
            })
            .collect();
        let y = rows
            .iter()
            .enumerate()
            .map(|(i, r)| 0.3 * r[0] - r[1] + ((i * 7 % 5) as f64) * 0.1)
            .collect();
        Dataset::from_rows(y, &rows).unwrap()
    }

    #[test]
    fn bic_examples() {
        assert_eq!(bic(-100.0, 0, 200), 200.0);
        assert_relative_eq!(bic(-100.0, 2, 200), 210.596_634_733_096_07, epsilon = 1e-10);
        assert!(bic(-100.0, 1, 50) < bic(-100.0, 2, 50));
    }

    #[test]
    fn zero_split_design_is_plain_glm() {
        let d = small_dataset(10);
        let s = ModelStructure::no_splits(&[CovariateRole::Varying; 3]);
        let x = build_design(&d, &s).unwrap();
        assert_eq!(x.ncols(), 4);
        for i in 0..10 {
            assert_eq!(x[(i, 0)], 1.0);
            assert_eq!(x[(i, 2)], d.value(i, 1));
        }
    }

    #[test]
    fn scenario_two_design_has_six_columns_and_partitions_sum() {
        let d = small_dataset(40);
        let x = build_design(&d, &scenario_two_structure()).unwrap();
        assert_eq!(x.ncols(), 6);
        for i in 0..40 {
            let s: f64 = (1..4).map(|c| x[(i, c)]).sum();
            assert_eq!(s, d.value(i, 0));
            let nonzero = (1..4).filter(|&c| x[(i, c)] != 0.0).count();
            assert!(nonzero <= 1);
        }
    }

    #[test]
    fn empty_leaf_is_degenerate() {
        let d = small_dataset(10);
        let mut s = ModelStructure::no_splits(&[CovariateRole::Varying; 3]);
        s.trees[0].split_leaf(0, 1, 100.0).unwrap();
        assert!(matches!(
            build_design(&d, &s),
            Err(TsvcError::DegenerateDesign {
                covariate: 0,
                leaf: 1
            })
        ));
    }

    #[test]
    fn candidate_count_two_continuous() {
        let n = 15;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![i as f64 * 0.7 - 3.0, (i as f64 * 2.3).sin()])
            .collect();
        let y = (0..n).map(|i| i as f64).collect();
        let d = Dataset::from_rows(y, &rows).unwrap();
        let cfg = gaussian(2).with_min_node_size(1);
        let s = ModelStructure::no_splits(&[CovariateRole::Varying; 2]);
        let cands = enumerate_candidate_splits(&d, &s, &cfg).unwrap();
        assert_eq!(cands.len(), 2 * (n - 1));
        // Deterministic (j, leaf, k, c) order.
        for w in cands.windows(2) {
            let a = (w[0].rule.target_covariate, w[0].leaf, w[0].rule.modifier);
            let b = (w[1].rule.target_covariate, w[1].leaf, w[1].rule.modifier);
            assert!(a < b || (a == b && w[0].rule.threshold < w[1].rule.threshold));
        }
    }

    #[test]
    fn binary_modifier_has_one_threshold() {
        let d = small_dataset(20);
        let cfg = gaussian(3);
        let s = ModelStructure::no_splits(&[CovariateRole::Varying; 3]);
        let cands = enumerate_candidate_splits(&d, &s, &cfg).unwrap();
        let by_x3: Vec<_> = cands
            .iter()
            .filter(|c| c.rule.target_covariate == 0 && c.rule.modifier == 2)
            .collect();
        assert_eq!(by_x3.len(), 1);
        assert_eq!(by_x3[0].rule.threshold, 0.0);
    }

    #[test]
    fn excluded_covariate_gets_no_candidates() {
        let d = small_dataset(20);
        let mut cfg = gaussian(3);
        cfg.vary_set = vec![1, 2];
        cfg.fixed_effects = vec![0];
        let s = ModelStructure::no_splits(&cfg.roles());
        let cands = enumerate_candidate_splits(&d, &s, &cfg).unwrap();
        assert!(!cands.is_empty());
        assert!(cands.iter().all(|c| c.rule.target_covariate != 0));
    }

    #[test]
    fn single_covariate_has_no_split() {
        let d = Dataset::from_rows(
            vec![1.0, 2.0, 0.5, 3.0],
            &[vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
        )
        .unwrap();
        let s = ModelStructure::no_splits(&[CovariateRole::Varying]);
        assert!(select_best_split(&d, &s, &gaussian(1)).unwrap().is_none());
    }

    #[test]
    fn exact_split_is_found() {
        // y = x1 for x2 <= 0 and y = -2 x1 otherwise: one split gives RSS 0.
        let n = 12;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                vec![
                    1.0 + (i as f64 * 0.9).sin(),
                    if i % 2 == 0 {
                        -1.0 - i as f64
                    } else {
                        1.0 + i as f64
                    },
                ]
            })
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| if r[1] <= 0.0 { r[0] } else { -2.0 * r[0] })
            .collect();
        let d = Dataset::from_rows(y, &rows).unwrap();
        let cfg = gaussian(2).with_min_node_size(2);
        let s = ModelStructure::no_splits(&[CovariateRole::Varying; 2]);
        let sel = select_best_split(&d, &s, &cfg).unwrap().unwrap();
        assert_eq!(sel.rule.target_covariate, 0);
        assert_eq!(sel.rule.modifier, 1);
        assert!(sel.rule.threshold < 0.0);
        assert!(sel.fit.deviance < 1e-20);
    }

    #[test]
    fn update_scores_match_refit_scores() {
        let d = small_dataset(30);
        let cfg = gaussian(3).with_min_node_size(3);
        let mut refit = cfg.clone();
        refit.split_search = SplitSearch::Refit;
        let mut s = ModelStructure::no_splits(&[CovariateRole::Varying; 3]);
        for _ in 0..3 {
            let a = select_best_split(&d, &s, &cfg).unwrap().unwrap();
            let b = select_best_split(&d, &s, &refit).unwrap().unwrap();
            assert_eq!(a.rule, b.rule);
            assert_eq!(a.leaf, b.leaf);
            assert_relative_eq!(a.fit.deviance, b.fit.deviance, max_relative = 1e-10);
            s = a.structure;
        }
    }

    #[test]
    fn zero_max_splits_gives_plain_glm() {
        let d = small_dataset(30);
        let seq = grow_sequence(&d, &gaussian(3).with_max_splits(0)).unwrap();
        assert_eq!(seq.len(), 1);
        assert_eq!(seq[0].splits_performed, 0);
    }

    #[test]
    fn sequence_is_nested_and_monotone() {
        let d = small_dataset(60);
        let seq = grow_sequence(&d, &gaussian(3)).unwrap();
        for w in seq.windows(2) {
            assert!(w[1].fit.deviance <= w[0].fit.deviance * (1.0 + 1e-12));
            assert_eq!(w[1].splits_performed, w[0].splits_performed + 1);
            let changed: Vec<usize> = (0..3)
                .filter(|&j| w[0].structure.trees[j] != w[1].structure.trees[j])
                .collect();
            assert_eq!(changed.len(), 1);
        }
        let best = fit_tsvc(&d, &gaussian(3)).unwrap();
        assert!(seq.iter().all(|m| best.bic <= m.bic));
    }

    #[test]
    fn bic_ties_go_to_fewer_splits() {
        let d = small_dataset(30);
        let mut seq = grow_sequence(&d, &gaussian(3).with_max_splits(2)).unwrap();
        for m in &mut seq {
            m.bic = 1.0;
        }
        assert_eq!(select_by_bic(&seq), 0);
    }

    #[test]
    fn fit_is_deterministic() {
        let d = small_dataset(50);
        let a = fit_tsvc(&d, &gaussian(3)).unwrap();
        let b = fit_tsvc(&d, &gaussian(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn binomial_sequence_runs() {
        let rows: Vec<Vec<f64>> = (0..80)
            .map(|i| vec![((i * 37) % 17) as f64 / 4.0 - 2.0, (i % 2) as f64])
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let eta = if r[1] > 0.0 { 1.5 * r[0] } else { -0.5 * r[0] };
                let u = ((i * 7919) % 101) as f64 / 101.0;
                if u < 1.0 / (1.0 + (-eta).exp()) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let d = Dataset::from_rows(y, &rows).unwrap();
        let cfg = TsvcConfig::new(2, Family::BinomialLogit);
        let seq = grow_sequence(&d, &cfg).unwrap();
        assert!(!seq.is_empty());
        for w in seq.windows(2) {
            assert!(w[1].fit.deviance <= w[0].fit.deviance + 1e-6);
        }
    }
}
