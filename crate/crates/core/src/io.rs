//! Matrix import/export for user-supplied operators and bases.
//!
//! JSON form, entries row-major as `[re, im]` pairs:
//!
//! ```json
//! {"rows": 2, "cols": 2, "data": [[0,0],[0,0],[1,0],[0,0]]}
//! ```
//!
//! Plain-text form: one row per line, whitespace-separated entries written
//! `re,im` (or just `re`); blank lines and `#` comments are skipped.

use std::path::Path;

use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{is_finite, Matrix, Scalar, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub fn from_matrix(m: &Matrix) -> Self {
        let data = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| [m[(i, j)].re, m[(i, j)].im])
            .collect();
        MatrixFile { rows: m.nrows(), cols: m.ncols(), data }
    }

    pub fn to_matrix(&self) -> Result<Matrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Input(format!(
                "matrix declares {}x{} but has {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        let entries: Vec<Scalar> = self.data.iter().map(|&[re, im]| Scalar::new(re, im)).collect();
        if !entries.iter().all(|&z| is_finite(z)) {
            return Err(Error::Input("matrix entries must be finite".into()));
        }
        Ok(Matrix::from_row_slice(self.rows, self.cols, &entries))
    }
}

pub fn parse_matrix(text: &str) -> Result<Matrix> {
    if text.trim_start().starts_with('{') {
        let f: MatrixFile =
            serde_json::from_str(text).map_err(|e| Error::Input(format!("bad matrix JSON: {e}")))?;
        return f.to_matrix();
    }
    let mut rows: Vec<Vec<Scalar>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| parse_entry(tok).ok_or_else(|| Error::Input(format!("line {}: bad entry `{tok}`", lineno + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Input("ragged matrix rows".into()));
    }
    let flat: Vec<Scalar> = rows.into_iter().flatten().collect();
    if !flat.iter().all(|&z| is_finite(z)) {
        return Err(Error::Input("matrix entries must be finite".into()));
    }
    Ok(Matrix::from_row_slice(flat.len() / cols.max(1), cols, &flat))
}

fn parse_entry(tok: &str) -> Option<Scalar> {
    match tok.split_once(',') {
        Some((re, im)) => Some(Scalar::new(re.parse().ok()?, im.parse().ok()?)),
        None => Some(Scalar::new(tok.parse().ok()?, 0.0)),
    }
}

pub fn load_matrix(path: &Path) -> Result<Matrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_matrix(&text)
}

pub fn matrix_to_json(m: &Matrix) -> String {
    serde_json::to_string(&MatrixFile::from_matrix(m)).expect("matrix serializes")
}

/// Serializes complex scalars as `[re, im]` pairs.
pub fn pairs<S: Serializer>(v: &[Scalar], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

pub fn pairs_list<S: Serializer>(vs: &[Vector], s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<[f64; 2]>> = vs.iter().map(|v| v.iter().map(|z| [z.re, z.im]).collect()).collect();
    rows.serialize(s)
}

pub fn pair(z: &Scalar) -> [f64; 2] {
    [z.re, z.im]
}
