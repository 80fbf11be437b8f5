use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::data::{infer_kind, ColumnMeta, Dataset};
use crate::error::{Result, TsvcError};

/// Numeric CSV contents, column-major, before an outcome is chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    /// Parses a header row and numeric cells. Parse errors report the
    /// 1-based data row (the header is row 0) and the column name.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            return Err(TsvcError::EmptyFile);
        }
        for (a, h) in headers.iter().enumerate() {
            if headers[..a].contains(h) {
                return Err(TsvcError::InvalidInput(format!(
                    "duplicate column name {h:?}"
                )));
            }
        }
        let mut columns = vec![Vec::new(); headers.len()];
        for (r, record) in rdr.records().enumerate() {
            let record = record?;
            for (c, cell) in record.iter().enumerate() {
                let value = cell
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| TsvcError::Parse {
                        row: r + 1,
                        column: headers[c].clone(),
                        value: cell.to_string(),
                    })?;
                columns[c].push(value);
            }
        }
        if columns[0].is_empty() {
            return Err(TsvcError::EmptyFile);
        }
        Ok(Self { headers, columns })
    }

    pub fn nrows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| TsvcError::MissingColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        Ok(&self.columns[self.column_index(name)?])
    }

    /// Dataset with `outcome` as response (default: `"y"` if present, else
    /// the first column) and every other column as a covariate, in file
    /// order.
    pub fn to_dataset(&self, outcome: Option<&str>) -> Result<Dataset> {
        let outcome_idx = match outcome {
            Some(name) => self.column_index(name)?,
            None => self.headers.iter().position(|h| h == "y").unwrap_or(0),
        };
        let covariates: Vec<usize> = (0..self.headers.len())
            .filter(|&c| c != outcome_idx)
            .collect();
        self.select(outcome_idx, &covariates)
    }

    /// Dataset with the given outcome column and covariate columns.
    pub fn select(&self, outcome: usize, covariates: &[usize]) -> Result<Dataset> {
        let n = self.nrows();
        let x = DMatrix::from_fn(n, covariates.len(), |i, k| self.columns[covariates[k]][i]);
        let metas = covariates
            .iter()
            .map(|&c| ColumnMeta::new(self.headers[c].clone(), infer_kind(self.columns[c].iter())))
            .collect();
        Dataset::new(
            self.headers[outcome].clone(),
            self.columns[outcome].clone(),
            x,
            metas,
        )
    }

    pub fn from_dataset(dataset: &Dataset) -> Self {
        let mut headers = vec![dataset.outcome_name().to_string()];
        headers.extend(dataset.names());
        let mut columns = vec![dataset.outcome().to_vec()];
        columns.extend(
            dataset
                .covariates()
                .column_iter()
                .map(|c| c.iter().copied().collect()),
        );
        Self { headers, columns }
    }

    /// Writes the table with every value at full round-trip precision.
    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.headers)?;
        for i in 0..self.nrows() {
            w.write_record(self.columns.iter().map(|c| c[i].to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn load_table(path: impl AsRef<Path>) -> Result<Table> {
    Table::from_reader(File::open(path)?)
}

/// Reads a CSV file into a dataset; see [`Table::to_dataset`].
pub fn load_csv(path: impl AsRef<Path>, outcome: Option<&str>) -> Result<Dataset> {
    load_table(path)?.to_dataset(outcome)
}
