//! MatrixMarket `array` (dense, column-major) and `coordinate` (sparse,
//! 1-based) files with `real` values and `general` symmetry.

use std::path::Path;

use super::{fmt_real, write_atomic};
use crate::graph::AffinityGraph;
use crate::{ensure_finite, Matrix, Result, RgcError};

const ARRAY_HEADER: &str = "%%MatrixMarket matrix array real general";
const COORD_HEADER: &str = "%%MatrixMarket matrix coordinate real general";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Array,
    Coordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

struct Parser<'a> {
    path: &'a Path,
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Parser<'a> {
    fn err(&self, line: usize, column: usize, message: impl Into<String>) -> RgcError {
        RgcError::Parse {
            path: self.path.to_path_buf(),
            line: line as u64 + 1,
            column,
            message: message.into(),
        }
    }

    /// Next non-comment, non-blank line with its 0-based number.
    fn next_data(&mut self) -> Option<(usize, &'a str)> {
        self.lines
            .by_ref()
            .find(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('%'))
    }

    fn fields<T: std::str::FromStr>(
        &self,
        lineno: usize,
        line: &str,
        count: usize,
    ) -> Result<Vec<T>> {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != count {
            return Err(self.err(
                lineno,
                1,
                format!("expected {count} fields, found {}", toks.len()),
            ));
        }
        toks.iter()
            .enumerate()
            .map(|(c, t)| {
                t.parse::<T>()
                    .map_err(|_| self.err(lineno, c + 1, format!("cannot parse {t:?}")))
            })
            .collect()
    }
}

fn parse(path: &Path, content: &str) -> Result<(Layout, Matrix)> {
    let mut p = Parser {
        path,
        lines: content.lines().enumerate(),
    };
    let (_, banner) = p.lines.next().ok_or_else(|| p.err(0, 1, "empty file"))?;
    let words: Vec<String> = banner
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(p.err(0, 1, "missing %%MatrixMarket matrix banner"));
    }
    let layout = match words[2].as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        other => return Err(p.err(0, 3, format!("unsupported format {other:?}"))),
    };
    if !matches!(words[3].as_str(), "real" | "integer" | "double") {
        return Err(p.err(0, 4, format!("unsupported field {:?}", words[3])));
    }
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(p.err(0, 5, format!("unsupported symmetry {other:?}"))),
    };

    let (ln, size) = p
        .next_data()
        .ok_or_else(|| p.err(1, 1, "missing size line"))?;
    let m = match layout {
        Layout::Array => {
            let dims: Vec<usize> = p.fields(ln, size, 2)?;
            let (r, c) = (dims[0], dims[1]);
            if symmetry == Symmetry::Symmetric && r != c {
                return Err(p.err(ln, 1, "symmetric array must be square"));
            }
            let mut m = Matrix::zeros(r, c);
            let cells: Vec<(usize, usize)> = match symmetry {
                Symmetry::General => (0..c).flat_map(|j| (0..r).map(move |i| (i, j))).collect(),
                Symmetry::Symmetric => (0..c).flat_map(|j| (j..r).map(move |i| (i, j))).collect(),
            };
            for (i, j) in cells {
                let (ln, line) = p.next_data().ok_or_else(|| {
                    p.err(
                        ln,
                        1,
                        format!("missing value for entry ({}, {})", i + 1, j + 1),
                    )
                })?;
                let v: Vec<f64> = p.fields(ln, line, 1)?;
                m[(i, j)] = v[0];
                if symmetry == Symmetry::Symmetric {
                    m[(j, i)] = v[0];
                }
            }
            m
        }
        Layout::Coordinate => {
            let dims: Vec<usize> = p.fields(ln, size, 3)?;
            let (r, c, nnz) = (dims[0], dims[1], dims[2]);
            let mut m = Matrix::zeros(r, c);
            for _ in 0..nnz {
                let (ln, line) = p
                    .next_data()
                    .ok_or_else(|| p.err(ln, 1, format!("expected {nnz} entries")))?;
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(p.err(ln, 1, format!("expected 3 fields, found {}", toks.len())));
                }
                let idx = |c: usize| -> Result<usize> {
                    toks[c]
                        .parse::<usize>()
                        .map_err(|_| p.err(ln, c + 1, format!("cannot parse index {:?}", toks[c])))
                };
                let (i, j) = (idx(0)?, idx(1)?);
                if i == 0 || i > r || j == 0 || j > c {
                    return Err(p.err(ln, 1, format!("index ({i}, {j}) outside {r}x{c}")));
                }
                let v: f64 = toks[2]
                    .parse()
                    .map_err(|_| p.err(ln, 3, format!("cannot parse {:?}", toks[2])))?;
                m[(i - 1, j - 1)] = v;
                if symmetry == Symmetry::Symmetric {
                    m[(j - 1, i - 1)] = v;
                }
            }
            m
        }
    };
    if let Some((ln, _)) = p.next_data() {
        return Err(p.err(ln, 1, "unexpected trailing data"));
    }
    Ok((layout, m))
}

/// Reads either MatrixMarket layout into a dense matrix.
pub fn load_matrix_market(path: &Path) -> Result<Matrix> {
    let content = std::fs::read_to_string(path).map_err(|e| RgcError::io(path, e))?;
    let (_, m) = parse(path, &content)?;
    ensure_finite(&m, &path.display().to_string())?;
    Ok(m)
}

/// Dense matrix as MatrixMarket `array`, column-major.
pub fn save_matrix(path: &Path, m: &Matrix) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "{ARRAY_HEADER}")?;
        writeln!(w, "{} {}", m.nrows(), m.ncols())?;
        for v in m.iter() {
            writeln!(w, "{}", fmt_real(*v))?;
        }
        Ok(())
    })
}

/// Affinity graph as MatrixMarket `coordinate`, nonzeros only, row-major.
pub fn save_graph(path: &Path, s: &AffinityGraph) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "{COORD_HEADER}")?;
        writeln!(w, "{} {} {}", s.n(), s.n(), s.nnz())?;
        for (i, row) in s.rows().iter().enumerate() {
            for &(j, v) in row {
                writeln!(w, "{} {} {}", i + 1, j + 1, fmt_real(v))?;
            }
        }
        Ok(())
    })
}

/// Reads a graph saved by [`save_graph`] (or any square coordinate/array
/// file) and checks the affinity constraints.
pub fn load_graph(path: &Path) -> Result<AffinityGraph> {
    let content = std::fs::read_to_string(path).map_err(|e| RgcError::io(path, e))?;
    let (_, m) = parse(path, &content)?;
    ensure_finite(&m, &path.display().to_string())?;
    AffinityGraph::from_dense(&m).map_err(|e| match e {
        RgcError::InvalidInput(msg) => RgcError::InvalidInput(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn graph_file_lists_nonzeros_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("S.mtx");
        let g = AffinityGraph::new(
            3,
            vec![vec![(1, 0.25), (2, 0.75)], vec![(0, 1.0)], vec![(1, 1.0)]],
        )
        .unwrap();
        save_graph(&p, &g).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], COORD_HEADER);
        assert_eq!(lines[1], "3 3 4");
        assert_eq!(lines.len(), 6);
        assert!(lines[2].starts_with("1 2 "));
        assert_eq!(load_graph(&p).unwrap(), g);
    }

    #[test]
    fn parse_errors_carry_position() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.mtx");
        std::fs::write(&p, format!("{ARRAY_HEADER}\n% comment\n2 1\n1.0\nabc\n")).unwrap();
        match load_matrix_market(&p).unwrap_err() {
            RgcError::Parse { line, column, .. } => assert_eq!((line, column), (5, 1)),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn symmetric_coordinate() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.mtx");
        std::fs::write(
            &p,
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 0.5\n",
        )
        .unwrap();
        let m = load_matrix_market(&p).unwrap();
        assert_eq!(m[(0, 1)], 0.5);
        assert_eq!(m[(1, 0)], 0.5);
    }

    #[test]
    fn invalid_graph_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.mtx");
        std::fs::write(&p, format!("{COORD_HEADER}\n2 2 1\n1 2 0.5\n")).unwrap();
        assert!(load_graph(&p).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn array_round_trip_is_exact(
            r in 1usize..6, c in 1usize..6,
            vals in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 36)
        ) {
            let m = Matrix::from_fn(r, c, |i, j| vals[i * 6 + j]);
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("m.mtx");
            save_matrix(&p, &m).unwrap();
            let back = load_matrix_market(&p).unwrap();
            prop_assert_eq!(back.shape(), m.shape());
            for (a, b) in back.iter().zip(m.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            // Bytes are stable across a second write.
            let p2 = dir.path().join("m2.mtx");
            save_matrix(&p2, &back).unwrap();
            prop_assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&p2).unwrap());
        }
    }
}
