//! CSV and JSON persistence for every pipeline artifact.
//!
//! | artifact | format |
//! |---|---|
//! | data matrix | headerless CSV, one sample per row; optional header auto-skipped |
//! | ground truth | single-column CSV of integer labels, or the data's last column |
//! | pool / sampled labels | CSV, one sample per row, one clustering per column |
//! | similarity matrix | headerless CSV of `n` rows |
//! | manifests, metrics, reports | pretty-printed JSON |
//!
//! Malformed cells are reported with their file, 1-based line, and column.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use tensemble::basegen::DataMatrix;
use tensemble::ensemble::LabelMatrix;

use crate::{CliError, CliResult};

fn reader(path: &Path) -> CliResult<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn cell_error(path: &Path, line: u64, column: usize, value: &str, wanted: &str) -> CliError {
    CliError::Data(format!(
        "{}:{line}: column {} holds {value:?}, expected {wanted}",
        path.display(),
        column + 1,
    ))
}

fn looks_like_header(record: &csv::StringRecord) -> bool {
    record.iter().any(|cell| cell.parse::<f64>().is_err())
}

fn parse_label(path: &Path, line: u64, column: usize, cell: &str) -> CliResult<u32> {
    if let Ok(v) = cell.parse::<u32>() {
        return Ok(v);
    }
    // Accept integral floats such as "3.0" that other tools commonly emit.
    if let Ok(v) = cell.parse::<f64>() {
        if v.fract() == 0.0 && (0.0..=f64::from(u32::MAX)).contains(&v) {
            return Ok(v as u32);
        }
    }
    Err(cell_error(
        path,
        line,
        column,
        cell,
        "a non-negative integer label",
    ))
}

/// Reads a feature matrix; with `truth_last_column` the final column is split
/// off as integer ground-truth labels.
pub fn read_data_csv(
    path: &Path,
    truth_last_column: bool,
) -> CliResult<(DataMatrix, Option<Vec<u32>>)> {
    let mut rdr = reader(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut truth: Vec<u32> = Vec::new();
    let mut width: Option<usize> = None;
    for (index, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(index as u64 + 1, |p| p.line());
        if index == 0 && looks_like_header(&record) {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(CliError::Data(format!(
                    "{}:{line}: row has {} fields, expected {w}",
                    path.display(),
                    record.len(),
                )));
            }
            Some(_) => {}
        }
        let feature_count = record.len() - usize::from(truth_last_column);
        if feature_count == 0 {
            return Err(CliError::Data(format!(
                "{}:{line}: no feature columns left of the truth column",
                path.display(),
            )));
        }
        let mut row = Vec::with_capacity(feature_count);
        for (column, cell) in record.iter().take(feature_count).enumerate() {
            let value: f64 = cell
                .parse()
                .map_err(|_| cell_error(path, line, column, cell, "a real number"))?;
            row.push(value);
        }
        if truth_last_column {
            truth.push(parse_label(
                path,
                line,
                feature_count,
                &record[feature_count],
            )?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    let d = rows[0].len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let n = flat.len() / d;
    let features =
        Array2::from_shape_vec((n, d), flat).expect("row-width consistency was checked per record");
    let data = DataMatrix::new(features).map_err(CliError::from)?;
    Ok((data, truth_last_column.then_some(truth)))
}

/// Reads a single-column CSV of integer labels.
pub fn read_labels_csv(path: &Path) -> CliResult<Vec<u32>> {
    let mut rdr = reader(path)?;
    let mut labels = Vec::new();
    for (index, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(index as u64 + 1, |p| p.line());
        if record.len() != 1 {
            return Err(CliError::Data(format!(
                "{}:{line}: expected a single label column, found {} fields",
                path.display(),
                record.len(),
            )));
        }
        if index == 0 && record[0].parse::<f64>().is_err() {
            continue;
        }
        labels.push(parse_label(path, line, 0, &record[0])?);
    }
    if labels.is_empty() {
        return Err(CliError::Data(format!("{}: no labels", path.display())));
    }
    Ok(labels)
}

/// Reads a base-clustering pool: one sample per row, one clustering per
/// column.
pub fn read_pool_csv(path: &Path) -> CliResult<LabelMatrix> {
    let mut rdr = reader(path)?;
    let mut rows: Vec<Vec<u32>> = Vec::new();
    let mut width: Option<usize> = None;
    for (index, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(index as u64 + 1, |p| p.line());
        if index == 0 && looks_like_header(&record) {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(CliError::Data(format!(
                    "{}:{line}: row has {} fields, expected {w}",
                    path.display(),
                    record.len(),
                )));
            }
            Some(_) => {}
        }
        let mut row = Vec::with_capacity(record.len());
        for (column, cell) in record.iter().enumerate() {
            row.push(parse_label(path, line, column, cell)?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: no pool rows", path.display())));
    }
    let m = rows[0].len();
    let flat: Vec<u32> = rows.into_iter().flatten().collect();
    let n = flat.len() / m;
    let labels =
        Array2::from_shape_vec((n, m), flat).expect("row-width consistency was checked per record");
    LabelMatrix::new(labels).map_err(CliError::from)
}

fn writer(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes a pool or sampled label matrix.
pub fn write_pool_csv(path: &Path, pool: &LabelMatrix) -> CliResult<()> {
    let mut out = writer(path)?;
    for row in pool.as_array().rows() {
        let line: Vec<String> = row.iter().map(u32::to_string).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Writes one label per line.
pub fn write_labels_csv(path: &Path, labels: &[u32]) -> CliResult<()> {
    let mut out = writer(path)?;
    for label in labels {
        writeln!(out, "{label}")?;
    }
    Ok(())
}

/// Writes a similarity matrix as `n` headerless CSV rows.
pub fn write_matrix_csv(path: &Path, matrix: &Array2<f64>) -> CliResult<()> {
    let mut out = writer(path)?;
    for row in matrix.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.12}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Pretty-prints any serializable value as JSON.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut out = writer(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_file(name: &str, contents: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(format!("tensemble-io-{}-{name}", std::process::id()));
        std::fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn data_with_header_and_truth_column() {
        let path = temp_file("data.csv", "x,y,label\n1.0,2.0,0\n3.0,4.0,1\n5.0,6.0,1\n");
        let (data, truth) = read_data_csv(&path, true).unwrap();
        assert_eq!(data.n(), 3);
        assert_eq!(data.d(), 2);
        assert_eq!(truth.unwrap(), vec![0, 1, 1]);
    }

    #[test]
    fn malformed_cell_reports_line_and_column() {
        let path = temp_file("bad.csv", "1.0,2.0\n3.0,oops\n");
        let err = read_data_csv(&path, false).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":2"), "{msg}");
        assert!(msg.contains("column 2"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let path = temp_file("ragged.csv", "1.0,2.0\n3.0\n");
        assert!(read_data_csv(&path, false).is_err());
    }

    #[test]
    fn labels_accept_integral_floats() {
        let path = temp_file("labels.csv", "label\n2.0\n3\n2\n");
        assert_eq!(read_labels_csv(&path).unwrap(), vec![2, 3, 2]);
    }

    #[test]
    fn pool_round_trips() {
        let pool = LabelMatrix::from_columns(&[vec![0, 0, 1], vec![1, 1, 0]]).unwrap();
        let path =
            std::env::temp_dir().join(format!("tensemble-io-pool-{}.csv", std::process::id()));
        write_pool_csv(&path, &pool).unwrap();
        let back = read_pool_csv(&path).unwrap();
        assert_eq!(back.as_array(), pool.as_array());
    }
}
