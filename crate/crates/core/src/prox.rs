//! Hard-thresholding projections onto cardinality and row/column-cardinality
//! balls, and the matching cardinality counters.
//!
//! Ties at the selection boundary are broken toward the smaller row-major
//! index (smaller row index for row selection), so every projection returns a
//! matrix with at most the requested number of nonzeros, deterministically.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which structure the output matrix is forced to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SparsityMode {
    /// At most `r` nonzero rows (few outputs).
    Row,
    /// At most `r` nonzero columns (few measured states).
    Column,
}

impl std::str::FromStr for SparsityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "row" | "rows" => Ok(SparsityMode::Row),
            "column" | "columns" | "col" => Ok(SparsityMode::Column),
            other => Err(Error::InvalidConfig(format!(
                "unknown sparsity mode `{other}` (expected row or column)"
            ))),
        }
    }
}

impl std::fmt::Display for SparsityMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SparsityMode::Row => write!(f, "row"),
            SparsityMode::Column => write!(f, "column"),
        }
    }
}

/// Sparsity budgets: `s` nonzero entries of K, `r` nonzero rows (or columns) of C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsityBudget {
    pub s: usize,
    pub r: usize,
    pub mode: SparsityMode,
}

impl SparsityBudget {
    /// Checks the budgets against K ∈ R^{m×p} and C ∈ R^{p×n}.
    pub fn check(&self, m: usize, p: usize, n: usize) -> Result<()> {
        if self.s == 0 || self.s > m * p {
            return Err(Error::BudgetOutOfRange(format!(
                "entry budget s = {} must lie in 1..={}",
                self.s,
                m * p
            )));
        }
        match self.mode {
            SparsityMode::Row if self.r == 0 || self.r > p => Err(Error::BudgetOutOfRange(
                format!("row budget exceeds output dimension (r = {}, p = {p})", self.r),
            )),
            SparsityMode::Column if self.r == 0 || self.r > n => Err(Error::BudgetOutOfRange(
                format!("column budget exceeds state dimension (r = {}, n = {n})", self.r),
            )),
            _ => Ok(()),
        }
    }

    /// Structured cardinality of C under this budget's mode.
    pub fn card_c(&self, c: &DMatrix<f64>) -> usize {
        match self.mode {
            SparsityMode::Row => card_row(c),
            SparsityMode::Column => card_col(c),
        }
    }

    /// Projects `y` onto the structured cardinality ball of this budget.
    pub fn project_c(&self, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self.mode {
            SparsityMode::Row => truncate_rows(y, self.r),
            SparsityMode::Column => truncate_columns(y, self.r),
        }
    }
}

/// Indices of the `k` largest scores, ties toward the smaller index.
///
/// Uses a partial selection around the k-th order statistic rather than a
/// full sort.
fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    if k >= idx.len() {
        return idx;
    }
    // descending by score, ascending by index
    let cmp = |a: &usize, b: &usize| -> Ordering {
        scores[*b]
            .partial_cmp(&scores[*a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    };
    if k > 0 {
        idx.select_nth_unstable_by(k - 1, cmp);
    }
    idx.truncate(k);
    idx
}

/// Keeps the `s` largest-magnitude entries of `x` and zeroes the rest.
pub fn truncate_entries(x: &DMatrix<f64>, s: usize) -> Result<DMatrix<f64>> {
    let (rows, cols) = x.shape();
    if s == 0 || s > rows * cols {
        return Err(Error::BudgetOutOfRange(format!(
            "entry budget s = {s} must lie in 1..={}",
            rows * cols
        )));
    }
    // row-major linear order so ties prefer the earlier row
    let mags: Vec<f64> = (0..rows * cols)
        .map(|l| x[(l / cols, l % cols)].abs())
        .collect();
    let mut out = DMatrix::zeros(rows, cols);
    for l in top_k(&mags, s) {
        let (i, j) = (l / cols, l % cols);
        out[(i, j)] = x[(i, j)];
    }
    Ok(out)
}

/// Keeps the `r` rows of `y` with largest Euclidean norm and zeroes the rest.
pub fn truncate_rows(y: &DMatrix<f64>, r: usize) -> Result<DMatrix<f64>> {
    let p = y.nrows();
    if r == 0 || r > p {
        return Err(Error::BudgetOutOfRange(format!(
            "row budget exceeds output dimension (r = {r}, p = {p})"
        )));
    }
    let norms: Vec<f64> = y.row_iter().map(|row| row.norm()).collect();
    let mut out = DMatrix::zeros(p, y.ncols());
    for i in top_k(&norms, r) {
        out.set_row(i, &y.row(i));
    }
    Ok(out)
}

/// Keeps the `r` columns of `y` with largest Euclidean norm and zeroes the rest.
pub fn truncate_columns(y: &DMatrix<f64>, r: usize) -> Result<DMatrix<f64>> {
    let n = y.ncols();
    if r == 0 || r > n {
        return Err(Error::BudgetOutOfRange(format!(
            "column budget exceeds state dimension (r = {r}, n = {n})"
        )));
    }
    let norms: Vec<f64> = y.column_iter().map(|col| col.norm()).collect();
    let mut out = DMatrix::zeros(y.nrows(), n);
    for j in top_k(&norms, r) {
        out.set_column(j, &y.column(j));
    }
    Ok(out)
}

/// Number of nonzero entries (exact zeros only).
pub fn card(x: &DMatrix<f64>) -> usize {
    x.iter().filter(|v| **v != 0.0).count()
}

/// Number of rows with at least one nonzero entry.
pub fn card_row(x: &DMatrix<f64>) -> usize {
    x.row_iter().filter(|row| row.iter().any(|v| *v != 0.0)).count()
}

/// Number of columns with at least one nonzero entry.
pub fn card_col(x: &DMatrix<f64>) -> usize {
    x.column_iter()
        .filter(|col| col.iter().any(|v| *v != 0.0))
        .count()
}
