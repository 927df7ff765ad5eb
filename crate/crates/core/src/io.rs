//! JSON file formats for matrices and pure states.
//!
//! Matrix files are `{"rows": N, "cols": N, "data": [[re, im], …]}` in
//! row-major order; state files are `{"n": qubits, "amplitudes": [[re, im], …]}`.
//! Parse failures report the byte offset of the offending token.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            data: m.row_major().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn into_matrix(self) -> Result<ComplexMatrix> {
        let entries = self.data.iter().map(|&[re, im]| C64::new(re, im)).collect();
        ComplexMatrix::from_row_major(self.rows, self.cols, entries)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub n: usize,
    pub amplitudes: Vec<[f64; 2]>,
}

/// Rounds to 12 significant digits, the precision used in JSON output.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Byte offset of a 1-based (line, column) position.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

/// Deserializes JSON, mapping errors to [`Error::Parse`] with a byte offset.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })
}

pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    parse_json::<MatrixFile>(text)?.into_matrix()
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

pub fn matrix_to_json(m: &ComplexMatrix) -> String {
    serde_json::to_string(&MatrixFile::from_matrix(m)).expect("matrix serialization")
}

pub fn write_matrix(path: impl AsRef<Path>, m: &ComplexMatrix) -> Result<()> {
    std::fs::write(path, matrix_to_json(m))?;
    Ok(())
}

/// Applies [`sig12`] to every number in a JSON value.
pub fn round_json(value: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match value {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64(sig12(x)))
            .map_or(Value::Number(n), Value::Number),
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with every float rounded to 12 significant digits.
pub fn to_json_sig12<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Domain(format!("serialization failed: {e}")))?;
    Ok(serde_json::to_string_pretty(&round_json(v)).expect("JSON values serialize"))
}
