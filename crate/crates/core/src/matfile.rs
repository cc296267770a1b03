//! Plain-text matrix files: one row per line, entries separated by single commas.
//!
//! Numbers are written in the shortest decimal form that parses back to the same
//! `f64` (never more than 17 significant digits), so a write/read cycle is
//! bit-exact. Magnitudes outside `[1e-5, 1e16)` use exponent notation.

use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn format_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|&v| format_f64(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut lines: Vec<&str> = text.split('\n').collect();
    if lines.last() == Some(&"") {
        lines.pop();
    }
    if lines.is_empty() {
        return Err(Error::InvalidMatrix("empty matrix file".into()));
    }
    let mut data = Vec::new();
    let mut cols = None;
    for (i, line) in lines.iter().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let mut count = 0;
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::InvalidMatrix(format!("line {}: cannot parse {field:?}", i + 1))
            })?;
            data.push(v);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(Error::InvalidMatrix(format!(
                    "line {} has {count} entries, expected {c}",
                    i + 1
                )))
            }
            _ => {}
        }
    }
    Matrix::new(lines.len(), cols.unwrap_or(0), data)
}

/// Reads a matrix that must hold a single vector, either as one row or one column.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let m = parse_matrix(text)?;
    if m.rows() == 1 || m.cols() == 1 {
        Ok(m.as_slice().to_vec())
    } else {
        Err(Error::Dimension(format!(
            "expected a vector, got a {}x{} matrix",
            m.rows(),
            m.cols()
        )))
    }
}
