//! Matrix file formats.
//!
//! CSV: one line per row, comma separated, no header. JSON:
//! `{"rows":D,"cols":N,"data":[row-major floats]}`. Both writers emit the
//! shortest representation that parses back to the same binary64 value.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{OscError, Result};
use crate::types::{DataMatrix, Matrix};

#[derive(Serialize, Deserialize)]
struct JsonMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

pub fn matrix_from_csv(text: &str) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                field.trim().parse::<f64>().map_err(|e| {
                    OscError::Parse(format!("line {}: {:?}: {e}", lineno + 1, field.trim()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(OscError::Parse(format!(
                    "line {}: expected {} fields, found {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(OscError::Parse("empty matrix file".into()));
    }
    let cols = rows[0].len();
    Ok(Matrix::from_row_iterator(
        rows.len(),
        cols,
        rows.into_iter().flatten(),
    ))
}

pub fn matrix_to_csv(m: &Matrix) -> String {
    let mut out = String::with_capacity(m.len() * 12);
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_from_json(text: &str) -> Result<Matrix> {
    let jm: JsonMatrix =
        serde_json::from_str(text).map_err(|e| OscError::Parse(e.to_string()))?;
    if jm.rows * jm.cols != jm.data.len() {
        return Err(OscError::Parse(format!(
            "declared {}x{} but found {} values",
            jm.rows,
            jm.cols,
            jm.data.len()
        )));
    }
    Ok(Matrix::from_row_slice(jm.rows, jm.cols, &jm.data))
}

pub fn matrix_to_json(m: &Matrix) -> String {
    let jm = JsonMatrix {
        rows: m.nrows(),
        cols: m.ncols(),
        data: m.transpose().iter().copied().collect(),
    };
    serde_json::to_string(&jm).expect("finite matrices always serialize")
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Reads a matrix, choosing the format from the file extension (`.json` or CSV).
pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    if is_json(path) {
        matrix_from_json(&text)
    } else {
        matrix_from_csv(&text)
    }
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let path = path.as_ref();
    let text = if is_json(path) {
        matrix_to_json(m)
    } else {
        matrix_to_csv(m)
    };
    fs::write(path, text)?;
    Ok(())
}

pub fn read_data_matrix(path: impl AsRef<Path>) -> Result<DataMatrix> {
    DataMatrix::new(read_matrix(path)?)
}
