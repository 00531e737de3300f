use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric K×K matrix of pairwise arm similarities with unit diagonal.
///
/// Entries may be negative; the update rule ignores non-positive entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SimilarityMatrix {
    dim: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Builds a matrix from row-major values, checking every invariant.
    pub fn from_row_major(dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != dim * dim {
            return Err(Error::Similarity {
                row: 0,
                col: 0,
                reason: format!(
                    "expected {} values for dimension {dim}, got {}",
                    dim * dim,
                    values.len()
                ),
            });
        }
        let m = Self { dim, values };
        m.validate()?;
        Ok(m)
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        let mut values = Vec::with_capacity(dim * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Similarity {
                    row: i,
                    col: row.len(),
                    reason: format!("row has {} entries, expected {dim}", row.len()),
                });
            }
            values.extend(row);
        }
        Self::from_row_major(dim, values)
    }

    /// Identity similarity: every pair of distinct arms is uncorrelated.
    pub fn identity(dim: usize) -> Self {
        let mut values = vec![0.0; dim * dim];
        for i in 0..dim {
            values[i * dim + i] = 1.0;
        }
        Self { dim, values }
    }

    /// Fills the upper triangle from `f(i, j)` for `i < j` and mirrors it.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = vec![0.0; dim * dim];
        for i in 0..dim {
            values[i * dim + i] = 1.0;
            for j in (i + 1)..dim {
                let r = f(i, j);
                values[i * dim + j] = r;
                values[j * dim + i] = r;
            }
        }
        Self::from_row_major(dim, values)
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim;
        for i in 0..n {
            for j in 0..n {
                let v = self.values[i * n + j];
                if !v.is_finite() || !(-1.0..=1.0).contains(&v) {
                    return Err(Error::Similarity {
                        row: i,
                        col: j,
                        reason: format!("entry {v} outside [-1, 1]"),
                    });
                }
                if i == j && v != 1.0 {
                    return Err(Error::Similarity {
                        row: i,
                        col: j,
                        reason: format!("diagonal entry must be 1, got {v}"),
                    });
                }
                if j > i && v != self.values[j * n + i] {
                    return Err(Error::Similarity {
                        row: i,
                        col: j,
                        reason: format!(
                            "asymmetric: r[{i}][{j}] = {v} but r[{j}][{i}] = {}",
                            self.values[j * n + i]
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values
            .chunks(self.dim.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// Text form: a first line holding the dimension, then one line of
    /// whitespace-separated values per row.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.dim);
        for row in self.values.chunks(self.dim.max(1)) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("similarity file is empty".into()))?;
        let dim: usize = header
            .parse()
            .map_err(|_| Error::Config(format!("bad dimension header {header:?}")))?;
        let mut values = Vec::with_capacity(dim * dim);
        for (row, line) in lines.enumerate() {
            for (col, tok) in line.split_whitespace().enumerate() {
                let v: f64 = tok.parse().map_err(|_| Error::Similarity {
                    row,
                    col,
                    reason: format!("unparseable value {tok:?}"),
                })?;
                values.push(v);
            }
        }
        Self::from_row_major(dim, values)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::Io {
            context: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            context: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse_text(&text)
    }
}

impl TryFrom<Vec<Vec<f64>>> for SimilarityMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<SimilarityMatrix> for Vec<Vec<f64>> {
    fn from(m: SimilarityMatrix) -> Self {
        m.rows()
    }
}
