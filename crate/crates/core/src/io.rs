//! Plain-text artifacts: dense matrices, sparsity patterns, convergence
//! history, and benchmark layouts. Reals are written with 17 significant
//! digits so that a write/read cycle is exact.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::benchmarks::DistributedLayout;
use crate::error::{Error, Result};
use crate::palm::ConvergenceRecord;

pub const HISTORY_HEADER: &str =
    "iter,phi,J,penalty_residual,eK,eC,eF,L1,L2,L3,cardK,cardrowC,decrease_slack";

fn real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// One matrix row per line, entries separated by single spaces.
pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| real(*v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Parses whitespace-delimited rows; blank lines and `#` comments are skipped.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| {
                    Error::Parse(format!("line {}: `{tok}` is not a number", lineno + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "line {}: expected {} entries, found {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("matrix file holds no rows".into()));
    }
    let cols = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Parse(format!("cannot read {}: {e}", path.display()))
    })?;
    parse_matrix(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    Ok(std::fs::write(path, format_matrix(m))?)
}

/// Nonzeros as `row col value` triplets, 1-indexed, row-major order.
pub fn format_pattern(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if v != 0.0 {
                let _ = writeln!(out, "{} {} {}", i + 1, j + 1, real(v));
            }
        }
    }
    out
}

/// Inverse of [`format_pattern`] for a matrix of known shape.
pub fn parse_pattern(text: &str, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(rows, cols);
    for (lineno, line) in text.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let bad = || Error::Parse(format!("pattern line {}: `{line}`", lineno + 1));
        if toks.len() != 3 {
            return Err(bad());
        }
        let i: usize = toks[0].parse().map_err(|_| bad())?;
        let j: usize = toks[1].parse().map_err(|_| bad())?;
        let v: f64 = toks[2].parse().map_err(|_| bad())?;
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(bad());
        }
        m[(i - 1, j - 1)] = v;
    }
    Ok(m)
}

pub fn format_history(history: &[ConvergenceRecord]) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for r in history {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.iter,
            real(r.phi),
            real(r.j_value),
            real(r.penalty_residual),
            real(r.e_k),
            real(r.e_c),
            real(r.e_f),
            real(r.l1),
            real(r.l2),
            real(r.l3),
            r.card_k,
            r.card_c,
            real(r.decrease_slack),
        );
    }
    out
}

/// Two columns `x y`, one subsystem per line in block order.
pub fn format_layout(layout: &DistributedLayout) -> String {
    let mut out = String::new();
    for [x, y] in &layout.positions {
        let _ = writeln!(out, "{} {}", real(*x), real(*y));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matrix_text_layout() {
        let m = nalgebra::dmatrix![1.0, -0.5; 0.0, 3.25e-7];
        let text = format_matrix(&m);
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap().split(' ').count(), 2);
        assert_eq!(parse_matrix(&text).unwrap(), m);
    }

    #[test]
    fn ragged_matrix_rejected() {
        let err = parse_matrix("1 2\n3\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(parse_matrix("1 x\n").is_err());
        assert!(parse_matrix("\n# nothing\n").is_err());
    }

    #[test]
    fn pattern_is_one_indexed() {
        let m = nalgebra::dmatrix![0.0, 2.0; -1.0, 0.0];
        let text = format_pattern(&m);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("1 2 "));
        assert!(lines[1].starts_with("2 1 "));
        assert_eq!(parse_pattern(&text, 2, 2).unwrap(), m);
        assert!(parse_pattern("0 1 1.0\n", 2, 2).is_err());
    }

    proptest! {
        #[test]
        fn matrix_round_trip_is_exact(
            rows in 1usize..5,
            cols in 1usize..5,
            seed in prop::collection::vec(-1e12f64..1e12, 25),
            scale in prop::sample::select(vec![1.0, 1e-300, 1e-9, 1e150]),
        ) {
            let m = DMatrix::from_fn(rows, cols, |i, j| seed[i * 5 + j] * scale);
            prop_assert_eq!(parse_matrix(&format_matrix(&m)).unwrap(), m);
        }
    }
}
