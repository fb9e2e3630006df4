//! CSV ingestion.
//!
//! Inputs are numeric CSV files with a header row. iid families read the `y`
//! column (the multivariate normal reads every column, in file order).
//! Regression models read `y` as the response and every other column as a
//! covariate.

use std::path::Path;

use crate::error::{Error, Result};
use crate::models::Family;
use crate::regression::DesignMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    /// Column-major values.
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn read_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
        Self::read(file)
    }

    pub fn read<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            return Err(Error::Data("CSV has no header".into()));
        }
        let mut columns = vec![Vec::new(); headers.len()];
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::Data(format!("row {} column `{}`: `{field}` is not a number", i + 2, headers[j]))
                })?;
                if !v.is_finite() {
                    return Err(Error::Data(format!("row {} column `{}` is not finite", i + 2, headers[j])));
                }
                columns[j].push(v);
            }
        }
        Ok(Self { headers, columns })
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|j| self.columns[j].as_slice())
            .ok_or_else(|| Error::Data(format!("missing column `{name}`")))
    }
}

/// Flat row-major observations for an iid family.
pub fn family_observations(table: &Table, family: &Family) -> Result<Vec<f64>> {
    match family {
        Family::MultivariateNormal { dim } => {
            if table.columns.len() != *dim {
                return Err(Error::Data(format!(
                    "mvnormal of dimension {dim} needs {dim} columns, got {}",
                    table.columns.len()
                )));
            }
            let mut out = Vec::with_capacity(table.rows() * dim);
            for i in 0..table.rows() {
                out.extend(table.columns.iter().map(|c| c[i]));
            }
            Ok(out)
        }
        _ => Ok(table.column("y")?.to_vec()),
    }
}

fn is_binary(col: &[f64]) -> bool {
    col.iter().all(|v| *v == 0.0 || *v == 1.0)
}

/// Location and scale removed from one column.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Scaling {
    pub column: String,
    pub mean: f64,
    pub sd: f64,
}

/// Centers and scales a non-binary column to mean 0 and sd 1 (divisor
/// `n − 1`). Binary and constant columns are left alone and return `None`.
pub fn standardize_column(col: &mut [f64]) -> Option<(f64, f64)> {
    if is_binary(col) || col.len() < 2 {
        return None;
    }
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    if !(sd > 0.0) {
        return None;
    }
    col.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    Some((mean, sd))
}

pub fn standardize_columns(columns: &mut [Vec<f64>]) {
    for col in columns.iter_mut() {
        standardize_column(col);
    }
}

/// Regression design and response, with the constants removed by
/// standardization (empty when it was off).
#[derive(Debug, Clone)]
pub struct RegressionInputs {
    pub design: DesignMatrix,
    pub y: Vec<f64>,
    pub scaling: Vec<Scaling>,
}

/// Design and response for a regression model. With `standardize`, the
/// response and covariates are standardized (binary columns excepted).
pub fn regression_inputs(table: &Table, intercept: bool, standardize: bool) -> Result<RegressionInputs> {
    let mut y = table.column("y")?.to_vec();
    let (names, mut cols): (Vec<String>, Vec<Vec<f64>>) = table
        .headers
        .iter()
        .zip(&table.columns)
        .filter(|(h, _)| h.as_str() != "y")
        .map(|(h, c)| (h.clone(), c.clone()))
        .unzip();
    if cols.is_empty() && !intercept {
        return Err(Error::Data("regression needs at least one covariate or an intercept".into()));
    }
    let mut scaling = Vec::new();
    if standardize {
        let mut record = |name: &str, col: &mut [f64]| {
            if let Some((mean, sd)) = standardize_column(col) {
                scaling.push(Scaling { column: name.to_string(), mean, sd });
            }
        };
        record("y", &mut y);
        for (name, col) in names.iter().zip(cols.iter_mut()) {
            record(name, col);
        }
    }
    let rows: Vec<Vec<f64>> = (0..y.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    let design = DesignMatrix::with_intercept(&rows, names, intercept)?;
    Ok(RegressionInputs { design, y, scaling })
}
