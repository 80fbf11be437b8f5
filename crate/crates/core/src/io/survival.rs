//! Person-period expansion for discrete-time hazard models.
//!
//! A subject observed until period `t_i` contributes one row per period
//! `1..=t_i`. The binary outcome is 1 only in period `t_i` and only if the
//! subject had the event there; censored subjects contribute zeros
//! throughout. A logistic model on the expanded rows is a model for the
//! discrete hazard `P(T = t | T >= t, x)`. Every observed period gets a row,
//! including the last one.

use nalgebra::DMatrix;

use super::table::Table;
use crate::config::TsvcConfig;
use crate::data::{infer_kind, ColumnKind, ColumnMeta, Dataset};
use crate::error::{Result, TsvcError};
use crate::glm::Family;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurvivalSchema {
    pub time_column: String,
    pub event_column: String,
}

/// Expanded data plus the column layout needed to configure a fit.
///
/// Covariates come first (file order, minus time and event), then the
/// period column (named like the time column), then indicators for periods
/// `2..=k` named `<time>_<period>`.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardExpansion {
    pub dataset: Dataset,
    /// Original subject (row) index of every expanded row.
    pub subject: Vec<usize>,
    pub periods: usize,
    pub covariate_columns: Vec<usize>,
    pub period_column: usize,
    pub period_indicators: Vec<usize>,
}

impl HazardExpansion {
    /// Logistic configuration with period indicators as fixed effects, the
    /// period itself modifier-only, and every covariate's effect allowed to
    /// vary with the period alone.
    pub fn config(&self) -> TsvcConfig {
        let p = self.dataset.p();
        let mut config = TsvcConfig::new(p, Family::BinomialLogit);
        config.vary_set = self.covariate_columns.clone();
        config.fixed_effects = self.period_indicators.clone();
        config.modifier_only = vec![self.period_column];
        config.modifier_sets = (0..p)
            .map(|j| {
                if self.covariate_columns.contains(&j) {
                    vec![self.period_column]
                } else {
                    Vec::new()
                }
            })
            .collect();
        config
    }
}

pub fn expand_discrete_hazard(table: &Table, schema: &SurvivalSchema) -> Result<HazardExpansion> {
    let time_idx = table.column_index(&schema.time_column)?;
    let event_idx = table.column_index(&schema.event_column)?;
    if time_idx == event_idx {
        return Err(TsvcError::Config(
            "time and event columns must differ".into(),
        ));
    }
    let times = &table.columns[time_idx];
    let events = &table.columns[event_idx];
    let mut periods = Vec::with_capacity(times.len());
    for (i, (&t, &d)) in times.iter().zip(events).enumerate() {
        if t < 1.0 || t.fract() != 0.0 {
            return Err(TsvcError::InvalidInput(format!(
                "row {}: time {t} is not a positive integer",
                i + 1
            )));
        }
        if d != 0.0 && d != 1.0 {
            return Err(TsvcError::InvalidInput(format!(
                "row {}: event flag {d} is not 0 or 1",
                i + 1
            )));
        }
        periods.push(t as usize);
    }
    let k = periods.iter().copied().max().unwrap_or(0);
    let covariates: Vec<usize> = (0..table.headers.len())
        .filter(|&c| c != time_idx && c != event_idx)
        .collect();
    let time_name = &schema.time_column;
    let mut names: Vec<String> = covariates
        .iter()
        .map(|&c| table.headers[c].clone())
        .collect();
    names.push(time_name.clone());
    for period in 2..=k {
        let name = format!("{time_name}_{period}");
        if names.contains(&name) {
            return Err(TsvcError::InvalidInput(format!(
                "period indicator {name:?} clashes with an existing column"
            )));
        }
        names.push(name);
    }

    let rows: usize = periods.iter().sum();
    let width = names.len();
    let mut x = DMatrix::zeros(rows, width);
    let mut y = Vec::with_capacity(rows);
    let mut subject = Vec::with_capacity(rows);
    let period_col = covariates.len();
    let mut r = 0;
    for (i, &ti) in periods.iter().enumerate() {
        for t in 1..=ti {
            for (c, &src) in covariates.iter().enumerate() {
                x[(r, c)] = table.columns[src][i];
            }
            x[(r, period_col)] = t as f64;
            if t >= 2 {
                x[(r, period_col + t - 1)] = 1.0;
            }
            y.push(if t == ti && events[i] == 1.0 {
                1.0
            } else {
                0.0
            });
            subject.push(i);
            r += 1;
        }
    }
    let metas = names
        .into_iter()
        .enumerate()
        .map(|(c, name)| {
            let kind = if c < period_col {
                infer_kind(x.column(c).iter())
            } else if c == period_col {
                ColumnKind::Ordinal
            } else {
                ColumnKind::Binary
            };
            ColumnMeta::new(name, kind)
        })
        .collect();
    let dataset = Dataset::new(schema.event_column.clone(), y, x, metas)?;
    Ok(HazardExpansion {
        dataset,
        subject,
        periods: k,
        covariate_columns: (0..period_col).collect(),
        period_column: period_col,
        period_indicators: (period_col + 1..width).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> SurvivalSchema {
        SurvivalSchema {
            time_column: "t".into(),
            event_column: "d".into(),
        }
    }

    fn expand(csv: &str) -> Result<HazardExpansion> {
        expand_discrete_hazard(&Table::from_reader(csv.as_bytes()).unwrap(), &schema())
    }

    #[test]
    fn event_at_three() {
        let e = expand("t,d,age\n3,1,50\n").unwrap();
        assert_eq!(e.dataset.outcome(), &[0.0, 0.0, 1.0]);
        assert_eq!(e.dataset.names(), vec!["age", "t", "t_2", "t_3"]);
        assert_eq!(e.dataset.row(2), vec![50.0, 3.0, 0.0, 1.0]);
        assert_eq!(e.dataset.row(0), vec![50.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn censored_contributes_zeros() {
        let e = expand("t,d,age\n2,0,50\n1,1,40\n").unwrap();
        assert_eq!(e.dataset.outcome(), &[0.0, 0.0, 1.0]);
        assert_eq!(e.subject, vec![0, 0, 1]);
    }

    #[test]
    fn invalid_times_and_events() {
        assert!(expand("t,d,x\n0,1,1\n").is_err());
        assert!(expand("t,d,x\n-1,1,1\n").is_err());
        assert!(expand("t,d,x\n1.5,1,1\n").is_err());
        assert!(expand("t,d,x\n2,2,1\n").is_err());
    }

    #[test]
    fn config_roles() {
        let e = expand("t,d,age,sex\n3,1,50,0\n2,0,40,1\n").unwrap();
        let c = e.config();
        c.validate(e.dataset.p()).unwrap();
        assert_eq!(c.vary_set, vec![0, 1]);
        assert_eq!(c.modifier_only, vec![2]);
        assert_eq!(c.fixed_effects, vec![3, 4]);
        assert_eq!(c.modifiers_of(0), vec![2]);
    }
}
