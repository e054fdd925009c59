//! Numeric CSV input: data matrices and p-vectors.

use std::path::Path;

use hdboot::stats::SampleMatrix;

use crate::error::CliError;

/// Rows of numbers from a headerless or single-header CSV. A first row with
/// any non-numeric field is taken as the header.
fn numeric_rows(path: &Path) -> Result<Vec<(u64, Vec<f64>)>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::io(path, e))?;
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| match e.is_io_error() {
            true => CliError::io(path, e),
            false => CliError::Usage(format!("{}: {e}", path.display())),
        })?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Result<Vec<f64>, usize> = record
            .iter()
            .enumerate()
            .map(|(j, field)| field.parse::<f64>().map_err(|_| j))
            .collect();
        match parsed {
            Ok(values) => {
                if let Some(j) = values.iter().position(|v| !v.is_finite()) {
                    return Err(CliError::Usage(format!(
                        "{}: row {line}, column {}: non-finite value",
                        path.display(),
                        j + 1
                    )));
                }
                rows.push((line, values));
            }
            Err(_) if idx == 0 => {}
            Err(j) => {
                return Err(CliError::Usage(format!(
                    "{}: row {line}, column {}: {:?} is not a number",
                    path.display(),
                    j + 1,
                    &record[j]
                )))
            }
        }
    }
    Ok(rows)
}

pub fn read_matrix(path: &Path) -> Result<SampleMatrix, CliError> {
    let rows = numeric_rows(path)?;
    let Some((_, first)) = rows.first() else {
        return Err(CliError::Usage(format!("{}: no data rows", path.display())));
    };
    let p = first.len();
    let mut values = Vec::with_capacity(rows.len() * p);
    for (line, row) in &rows {
        if row.len() != p {
            return Err(CliError::Usage(format!(
                "{}: row {line} has {} fields, expected {p}",
                path.display(),
                row.len()
            )));
        }
        values.extend_from_slice(row);
    }
    Ok(SampleMatrix::new(rows.len(), p, values)?)
}

/// All numbers of a one-row or one-column CSV, in reading order.
pub fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    let values: Vec<f64> = numeric_rows(path)?.into_iter().flat_map(|(_, row)| row).collect();
    if values.is_empty() {
        return Err(CliError::Usage(format!("{}: no values", path.display())));
    }
    Ok(values)
}

/// A comma-separated list; a single value is broadcast to length `p`.
pub fn parse_inline(flag: &str, text: &str, p: usize) -> Result<Vec<f64>, CliError> {
    let values = text
        .split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("--{flag}: {s:?} is not a finite number")))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(if values.len() == 1 { vec![values[0]; p] } else { values })
}

pub fn check_dim(what: &str, found: usize, p: usize) -> Result<(), CliError> {
    if found != p {
        return Err(CliError::Usage(format!(
            "{what} has {found} entries but the data have p = {p} columns"
        )));
    }
    Ok(())
}
