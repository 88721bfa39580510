//! CSV formats: headerless numeric matrices, `index,label` files, and the
//! solver's convergence history.

use std::path::Path;

use super::{fmt_real, write_atomic};
use crate::learning::{LabelAssignment, PartialLabels};
use crate::solver::ConvergenceRecord;
use crate::{Matrix, Result, RgcError};

pub const HISTORY_HEADER: &str = "iter,objective,res_x,res_z,rank_D,nnz_E";
const LABELS_HEADER: &str = "index,label";

fn parse_err(path: &Path, line: u64, column: usize, message: impl Into<String>) -> RgcError {
    RgcError::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> RgcError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => RgcError::io(path, io),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => parse_err(
            path,
            line,
            1,
            format!("row has {len} fields, previous rows have {expected_len}"),
        ),
        other => parse_err(path, line, 1, format!("{other:?}")),
    }
}

fn reader(path: &Path, headers: bool) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(headers)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))
}

/// Headerless numeric CSV; row `i` of the file is row `i` of the matrix.
pub fn load_csv_matrix(path: &Path) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in reader(path, false)?.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, f)| {
                f.parse::<f64>()
                    .map_err(|_| parse_err(path, line, c + 1, format!("cannot parse {f:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(RgcError::InvalidInput(format!(
            "{} holds no data",
            path.display()
        )));
    }
    Ok(Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// One line per matrix row, no header.
pub fn save_csv_matrix(path: &Path, m: &Matrix) -> Result<()> {
    write_atomic(path, |w| {
        for row in m.row_iter() {
            let line: Vec<String> = row.iter().map(|&v| fmt_real(v)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    })
}

/// Raw `(index, label)` pairs in file order.
pub fn load_labels(path: &Path) -> Result<Vec<(usize, usize)>> {
    let mut rdr = reader(path, true)?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != ["index", "label"] {
        return Err(parse_err(
            path,
            1,
            1,
            format!("expected header {LABELS_HEADER:?}"),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |c: usize| -> Result<usize> {
            rec[c]
                .parse::<usize>()
                .map_err(|_| parse_err(path, line, c + 1, format!("cannot parse {:?}", &rec[c])))
        };
        out.push((field(0)?, field(1)?));
    }
    Ok(out)
}

/// Labels covering every index `0..n` exactly once.
pub fn load_full_labels(path: &Path) -> Result<LabelAssignment> {
    let pairs = load_labels(path)?;
    if pairs.is_empty() {
        return Err(RgcError::InvalidInput(format!(
            "{} has no labels",
            path.display()
        )));
    }
    let n = pairs.len();
    let mut labels = vec![None; n];
    for (i, l) in pairs {
        match labels.get_mut(i) {
            Some(slot @ None) => *slot = Some(l),
            Some(Some(_)) => {
                return Err(RgcError::InvalidInput(format!(
                    "{}: index {i} appears twice",
                    path.display()
                )))
            }
            None => {
                return Err(RgcError::InvalidInput(format!(
                    "{}: index {i} out of range for {n} rows",
                    path.display()
                )))
            }
        }
    }
    Ok(LabelAssignment::new(
        labels.into_iter().map(|l| l.expect("filled")).collect(),
    ))
}

/// Labels for a subset of `n` samples; absent indices are unlabeled. The
/// class count is `classes` or, if `None`, one more than the largest label.
pub fn load_partial_labels(path: &Path, n: usize, classes: Option<usize>) -> Result<PartialLabels> {
    let pairs = load_labels(path)?;
    let mut labels = vec![None; n];
    for &(i, l) in &pairs {
        let slot = labels.get_mut(i).ok_or_else(|| {
            RgcError::InvalidInput(format!(
                "{}: index {i} out of range for {n} samples",
                path.display()
            ))
        })?;
        if slot.replace(l).is_some() {
            return Err(RgcError::InvalidInput(format!(
                "{}: index {i} appears twice",
                path.display()
            )));
        }
    }
    let c = classes.unwrap_or_else(|| pairs.iter().map(|p| p.1 + 1).max().unwrap_or(1));
    PartialLabels::new(labels, c)
}

pub fn save_labels(path: &Path, labels: &LabelAssignment) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "{LABELS_HEADER}")?;
        for (i, l) in labels.labels().iter().enumerate() {
            writeln!(w, "{i},{l}")?;
        }
        Ok(())
    })
}

pub fn save_history(path: &Path, history: &[ConvergenceRecord]) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "{HISTORY_HEADER}")?;
        for r in history {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.iter,
                fmt_real(r.objective),
                fmt_real(r.res_x),
                fmt_real(r.res_z),
                r.rank_d,
                r.nnz_e
            )?;
        }
        Ok(())
    })
}
