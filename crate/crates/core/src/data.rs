use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TsvcError};
use crate::glm::Family;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Binary,
    Ordinal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnMeta {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

/// Outcome vector plus an `n x p` covariate matrix.
///
/// Construction validates that every value is finite, that binary columns
/// hold only 0/1 and that the shapes agree; downstream code relies on these.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    outcome_name: String,
    outcome: Vec<f64>,
    covariates: DMatrix<f64>,
    columns: Vec<ColumnMeta>,
}

impl Dataset {
    pub fn new(
        outcome_name: impl Into<String>,
        outcome: Vec<f64>,
        covariates: DMatrix<f64>,
        columns: Vec<ColumnMeta>,
    ) -> Result<Self> {
        let n = outcome.len();
        let p = covariates.ncols();
        if n < 2 {
            return Err(TsvcError::InvalidInput(format!(
                "need at least 2 observations, got {n}"
            )));
        }
        if p == 0 {
            return Err(TsvcError::InvalidInput(
                "need at least one covariate".into(),
            ));
        }
        if covariates.nrows() != n {
            return Err(TsvcError::InvalidInput(format!(
                "outcome has {n} rows but covariates have {}",
                covariates.nrows()
            )));
        }
        if columns.len() != p {
            return Err(TsvcError::InvalidInput(format!(
                "{} column descriptions for {p} covariates",
                columns.len()
            )));
        }
        if outcome.iter().any(|v| !v.is_finite()) {
            return Err(TsvcError::NonFinite("outcome"));
        }
        if covariates.iter().any(|v| !v.is_finite()) {
            return Err(TsvcError::NonFinite("covariates"));
        }
        for (k, meta) in columns.iter().enumerate() {
            if meta.kind == ColumnKind::Binary
                && covariates.column(k).iter().any(|&v| v != 0.0 && v != 1.0)
            {
                return Err(TsvcError::InvalidInput(format!(
                    "binary column {:?} contains values other than 0 and 1",
                    meta.name
                )));
            }
        }
        for (a, meta) in columns.iter().enumerate() {
            if columns[..a].iter().any(|m| m.name == meta.name) {
                return Err(TsvcError::InvalidInput(format!(
                    "duplicate column name {:?}",
                    meta.name
                )));
            }
        }
        Ok(Self {
            outcome_name: outcome_name.into(),
            outcome,
            covariates,
            columns,
        })
    }

    /// Builds a dataset from row-major covariate rows, inferring binary
    /// columns and naming covariates `x1..xp`.
    pub fn from_rows(outcome: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(TsvcError::InvalidInput("ragged covariate rows".into()));
        }
        let x = DMatrix::from_fn(rows.len(), p, |i, k| rows[i][k]);
        let columns = (0..p)
            .map(|k| ColumnMeta::new(format!("x{}", k + 1), infer_kind(x.column(k).iter())))
            .collect();
        Self::new("y", outcome, x, columns)
    }

    pub fn n(&self) -> usize {
        self.outcome.len()
    }

    pub fn p(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn outcome_name(&self) -> &str {
        &self.outcome_name
    }

    pub fn covariates(&self) -> &DMatrix<f64> {
        &self.covariates
    }

    pub fn columns(&self) -> &[ColumnMeta] {
        &self.columns
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.covariates[(row, col)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.covariates.row(i).iter().copied().collect()
    }

    /// Same covariates, new outcome.
    pub fn with_outcome(&self, outcome: Vec<f64>) -> Result<Self> {
        if outcome.len() != self.n() {
            return Err(TsvcError::InvalidInput(format!(
                "replacement outcome has {} values, expected {}",
                outcome.len(),
                self.n()
            )));
        }
        if outcome.iter().any(|v| !v.is_finite()) {
            return Err(TsvcError::NonFinite("outcome"));
        }
        Ok(Self {
            outcome,
            ..self.clone()
        })
    }

    /// Rows selected by `indices`, repeats allowed.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let x = self.covariates.select_rows(indices.iter());
        let y = indices.iter().map(|&i| self.outcome[i]).collect();
        Self {
            outcome_name: self.outcome_name.clone(),
            outcome: y,
            covariates: x,
            columns: self.columns.clone(),
        }
    }

    /// Checks the outcome against the family's support.
    pub fn validate_for(&self, family: Family) -> Result<()> {
        if family == Family::BinomialLogit && self.outcome.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(TsvcError::InvalidInput(
                "binomial outcome must contain only 0 and 1".into(),
            ));
        }
        Ok(())
    }
}

pub(crate) fn infer_kind<'a>(values: impl Iterator<Item = &'a f64>) -> ColumnKind {
    let mut values = values.peekable();
    if values.peek().is_none() {
        return ColumnKind::Continuous;
    }
    if values.all(|&v| v == 0.0 || v == 1.0) {
        ColumnKind::Binary
    } else {
        ColumnKind::Continuous
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_rows_infers_binary() {
        let d = Dataset::from_rows(
            vec![1.0, 2.0, 3.0],
            &[vec![0.5, 1.0], vec![1.5, 0.0], vec![2.5, 1.0]],
        )
        .unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.p(), 2);
        assert_eq!(d.columns()[0].kind, ColumnKind::Continuous);
        assert_eq!(d.columns()[1].kind, ColumnKind::Binary);
    }

    #[test]
    fn rejects_bad_binary_and_nan() {
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 2.0]);
        let meta = vec![ColumnMeta::new("b", ColumnKind::Binary)];
        assert!(Dataset::new("y", vec![1.0, 2.0], x, meta).is_err());
        assert!(Dataset::from_rows(vec![f64::NAN, 1.0], &[vec![1.0], vec![2.0]]).is_err());
        assert!(Dataset::from_rows(vec![1.0], &[vec![1.0]]).is_err());
    }

    #[test]
    fn binomial_outcome_checked() {
        let d = Dataset::from_rows(vec![0.0, 2.0], &[vec![1.0], vec![2.0]]).unwrap();
        assert!(d.validate_for(Family::BinomialLogit).is_err());
        assert!(d.validate_for(Family::GaussianIdentity).is_ok());
    }

    #[test]
    fn subset_repeats_rows() {
        let d =
            Dataset::from_rows(vec![1.0, 2.0, 3.0], &[vec![10.0], vec![20.0], vec![30.0]]).unwrap();
        let s = d.subset(&[2, 2, 0]);
        assert_eq!(s.outcome(), &[3.0, 3.0, 1.0]);
        assert_eq!(s.value(1, 0), 30.0);
    }
}
