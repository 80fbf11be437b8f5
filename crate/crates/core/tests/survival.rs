mod common;

use tsvc::io::{expand_discrete_hazard, SurvivalSchema, Table};
use tsvc::{fit_tsvc, CovariateRole, TsvcError};

fn schema() -> SurvivalSchema {
    SurvivalSchema {
        time_column: "t".into(),
        event_column: "d".into(),
    }
}

/// Outcomes of the first subject; a censored companion keeps the expanded
/// data large enough to form a dataset.
fn outcomes(t: usize, d: u8) -> Vec<f64> {
    let table = common::survival_table(&[t, 2], &[d, 0]);
    let e = expand_discrete_hazard(&table, &schema()).unwrap();
    e.subject
        .iter()
        .zip(e.dataset.outcome())
        .filter(|(&s, _)| s == 0)
        .map(|(_, &y)| y)
        .collect()
}

#[test]
fn single_subject_expansions() {
    assert_eq!(outcomes(3, 1), [0.0, 0.0, 1.0]);
    assert_eq!(outcomes(1, 1), [1.0]);
    assert_eq!(outcomes(2, 0), [0.0, 0.0]);
}

#[test]
fn five_subjects_match_hand_expansion() {
    common::five_subject_expansion().unwrap();
}

#[test]
fn invalid_times_and_flags() {
    for text in [
        "t,d,z\n0,1,1\n",
        "t,d,z\n-2,1,1\n",
        "t,d,z\n1.5,1,1\n",
        "t,d,z\n2,2,1\n",
    ] {
        let table = Table::from_reader(text.as_bytes()).unwrap();
        assert!(matches!(
            expand_discrete_hazard(&table, &schema()),
            Err(TsvcError::InvalidInput(_))
        ));
    }
}

#[test]
fn hazard_model_lets_covariates_vary_with_time() {
    let mut text = String::from("t,d,z\n");
    for i in 0..150 {
        let z = ((i * 37) % 19) as f64 / 9.5 - 1.0;
        let t = 1 + (i * 7 + i / 3) % 5;
        let d = usize::from((i * 13) % 4 != 0);
        text.push_str(&format!("{t},{d},{z}\n"));
    }
    let table = Table::from_reader(text.as_bytes()).unwrap();
    let e = expand_discrete_hazard(&table, &schema()).unwrap();
    let config = e.config();
    assert_eq!(config.vary_set, vec![0]);
    assert_eq!(config.modifier_sets[0], vec![1]);
    let m = fit_tsvc(&e.dataset, &config).unwrap();
    let roles = m.structure.roles();
    assert_eq!(roles[0], CovariateRole::Varying);
    assert_eq!(roles[1], CovariateRole::ModifierOnly);
    assert!(roles[2..].iter().all(|&r| r == CovariateRole::Fixed));
    assert!(m.coefficients[1].is_empty());
    for tree in &m.structure.trees[2..] {
        assert_eq!(tree.split_count(), 0);
    }
    assert_eq!(
        m.structure.trees[0].splits_by_modifier(m.p())[2..]
            .iter()
            .sum::<usize>(),
        0
    );
}
