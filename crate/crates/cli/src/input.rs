use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{CliError, CliResult};

/// A parsed CSV: regressor matrix, optional response, and column names
/// (including `"intercept"` when one was prepended).
#[derive(Debug)]
pub struct Table {
    pub x: Array2<f64>,
    pub y: Option<Array1<f64>>,
    pub names: Vec<String>,
}

/// Reads a comma-separated file with a header row. The column named `y` is
/// the response; every other column is a numeric regressor. Rows are
/// numbered from 1 after the header.
pub fn read_table(path: &Path, intercept: bool, require_y: bool) -> CliResult<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(format!("cannot read header of {}: {e}", path.display())))?
        .clone();

    let y_col = headers.iter().position(|h| h == "y");
    if require_y && y_col.is_none() {
        return Err(CliError::Input(format!(
            "{}: no column named `y` in the header",
            path.display()
        )));
    }
    let x_cols: Vec<usize> = (0..headers.len()).filter(|&j| Some(j) != y_col).collect();
    let mut names: Vec<String> = x_cols.iter().map(|&j| headers[j].to_string()).collect();
    if intercept {
        names.insert(0, "intercept".into());
    }
    if names.is_empty() {
        return Err(CliError::Input(format!(
            "{}: no regressor columns (pass --intercept for an intercept-only model)",
            path.display()
        )));
    }

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::Input(format!("{}: row {row}: {e}", path.display())))?;
        let cell = |j: usize| -> CliResult<f64> {
            let raw = record.get(j).unwrap_or("");
            raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                CliError::Input(format!(
                    "{}: row {row}, column `{}`: expected a finite number, found {raw:?}",
                    path.display(),
                    &headers[j]
                ))
            })
        };
        if intercept {
            xs.push(1.0);
        }
        for &j in &x_cols {
            xs.push(cell(j)?);
        }
        if let Some(j) = y_col {
            ys.push(cell(j)?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }

    let x = Array2::from_shape_vec((rows, names.len()), xs).expect("row-major shape");
    Ok(Table {
        x,
        y: y_col.map(|_| Array1::from(ys)),
        names,
    })
}
