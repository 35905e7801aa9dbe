//! Text formats for symmetric matrices.
//!
//! **Dense**: a line holding `n`, then `n` lines of `n` whitespace-separated
//! decimal values. Blank lines and lines starting with `#` are ignored.
//!
//! **MatrixMarket**: `coordinate` storage with `real`, `integer` or `pattern`
//! fields and `symmetric` or `general` symmetry. Pattern entries read as 1.
//!
//! Values are written in shortest round-trip form, so write-then-read is exact.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Largest dimension accepted by the readers.
pub const MAX_DIMENSION: usize = 8192;

/// Reads either format, choosing MatrixMarket when the banner is present.
pub fn parse_matrix(text: &str) -> Result<SymMatrix> {
    parse_matrix_limited(text, MAX_DIMENSION)
}

/// [`parse_matrix`] with a caller-chosen dimension cap.
pub fn parse_matrix_limited(text: &str, max_dim: usize) -> Result<SymMatrix> {
    if text.trim_start().starts_with("%%MatrixMarket") {
        parse_matrix_market_limited(text, max_dim)
    } else {
        parse_dense_limited(text, max_dim)
    }
}

fn content_lines(text: &str, comment: char) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(move |(_, l)| !l.is_empty() && !l.starts_with(comment))
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid number '{tok}'")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite value '{tok}'")));
    }
    Ok(v)
}

fn parse_dimension(tok: &str, line: usize, max_dim: usize) -> Result<usize> {
    let n: usize = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid dimension '{tok}'")))?;
    if n == 0 {
        return Err(Error::parse(line, "dimension must be positive"));
    }
    if n > max_dim {
        return Err(Error::parse(
            line,
            format!("dimension {n} exceeds the limit of {max_dim}"),
        ));
    }
    Ok(n)
}

fn finish(n: usize, values: Vec<f64>, line: usize) -> Result<SymMatrix> {
    SymMatrix::from_row_major(n, values).map_err(|e| Error::parse(line, e.to_string()))
}

pub fn parse_dense(text: &str) -> Result<SymMatrix> {
    parse_dense_limited(text, MAX_DIMENSION)
}

/// [`parse_dense`] with a caller-chosen dimension cap.
pub fn parse_dense_limited(text: &str, max_dim: usize) -> Result<SymMatrix> {
    let mut lines = content_lines(text, '#');
    let (header_line, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty input: expected dimension"))?;
    let mut header_tokens = header.split_whitespace();
    let n = parse_dimension(header_tokens.next().unwrap_or(""), header_line, max_dim)?;
    if header_tokens.next().is_some() {
        return Err(Error::parse(header_line, "expected a single dimension"));
    }
    let mut values = Vec::new();
    let mut last_line = header_line;
    for row in 0..n {
        let (line, content) = lines.next().ok_or_else(|| {
            Error::parse(last_line + 1, format!("expected {n} rows, found {row}"))
        })?;
        last_line = line;
        let before = values.len();
        for tok in content.split_whitespace() {
            if values.len() - before == n {
                return Err(Error::parse(line, format!("row has more than {n} values")));
            }
            values.push(parse_value(tok, line)?);
        }
        let got = values.len() - before;
        if got != n {
            return Err(Error::parse(line, format!("expected {n} values, found {got}")));
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::parse(line, "unexpected content after the last row"));
    }
    finish(n, values, last_line)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    Symmetric,
    General,
}

pub fn parse_matrix_market(text: &str) -> Result<SymMatrix> {
    parse_matrix_market_limited(text, MAX_DIMENSION)
}

/// [`parse_matrix_market`] with a caller-chosen dimension cap.
pub fn parse_matrix_market_limited(text: &str, max_dim: usize) -> Result<SymMatrix> {
    let mut all = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (banner_line, banner) = all
        .find(|(_, l)| !l.is_empty())
        .ok_or_else(|| Error::parse(1, "empty input: expected MatrixMarket banner"))?;
    let (field, symmetry) = parse_banner(banner, banner_line)?;

    let mut lines = all.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (size_line, size) = lines
        .next()
        .ok_or_else(|| Error::parse(banner_line + 1, "missing size line"))?;
    let dims: Vec<&str> = size.split_whitespace().collect();
    if dims.len() != 3 {
        return Err(Error::parse(size_line, "size line must be 'rows cols entries'"));
    }
    let rows = parse_dimension(dims[0], size_line, max_dim)?;
    let cols = parse_dimension(dims[1], size_line, max_dim)?;
    if rows != cols {
        return Err(Error::parse(size_line, format!("matrix is {rows}x{cols}, not square")));
    }
    let n = rows;
    let nnz: usize = dims[2]
        .parse()
        .map_err(|_| Error::parse(size_line, format!("invalid entry count '{}'", dims[2])))?;
    let max_entries = match symmetry {
        Symmetry::Symmetric => n * (n + 1) / 2,
        Symmetry::General => n * n,
    };
    if nnz > max_entries {
        return Err(Error::parse(
            size_line,
            format!("{nnz} entries cannot fit a {n}x{n} {symmetry:?} matrix"),
        ));
    }

    let mut values = vec![0.0; n * n];
    let mut seen = BTreeSet::new();
    let mut last_line = size_line;
    for k in 0..nnz {
        let (line, content) = lines.next().ok_or_else(|| {
            Error::parse(last_line + 1, format!("expected {nnz} entries, found {k}"))
        })?;
        last_line = line;
        let toks: Vec<&str> = content.split_whitespace().collect();
        let expected = if field == Field::Pattern { 2 } else { 3 };
        if toks.len() != expected {
            return Err(Error::parse(
                line,
                format!("expected {expected} fields, found {}", toks.len()),
            ));
        }
        let index = |tok: &str| -> Result<usize> {
            let i: usize = tok
                .parse()
                .map_err(|_| Error::parse(line, format!("invalid index '{tok}'")))?;
            if i == 0 || i > n {
                return Err(Error::parse(line, format!("index {i} outside 1..={n}")));
            }
            Ok(i - 1)
        };
        let (i, j) = (index(toks[0])?, index(toks[1])?);
        if symmetry == Symmetry::Symmetric && j > i {
            return Err(Error::parse(
                line,
                "symmetric storage lists the lower triangle only",
            ));
        }
        if !seen.insert((i, j)) {
            return Err(Error::parse(line, format!("duplicate entry ({}, {})", i + 1, j + 1)));
        }
        let v = match field {
            Field::Pattern => 1.0,
            Field::Real => parse_value(toks[2], line)?,
        };
        values[i * n + j] = v;
        if symmetry == Symmetry::Symmetric {
            values[j * n + i] = v;
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::parse(line, "unexpected content after the last entry"));
    }
    finish(n, values, last_line)
}

fn parse_banner(banner: &str, line: usize) -> Result<(Field, Symmetry)> {
    let toks: Vec<String> = banner.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" {
        return Err(Error::parse(line, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    if toks[2] != "coordinate" {
        return Err(Error::parse(line, format!("unsupported format '{}'", toks[2])));
    }
    let field = match toks[3].as_str() {
        "real" | "integer" | "double" => Field::Real,
        "pattern" => Field::Pattern,
        other => return Err(Error::parse(line, format!("unsupported field '{other}'"))),
    };
    let symmetry = match toks[4].as_str() {
        "symmetric" => Symmetry::Symmetric,
        "general" => Symmetry::General,
        other => return Err(Error::parse(line, format!("unsupported symmetry '{other}'"))),
    };
    Ok((field, symmetry))
}

pub fn format_dense(m: &SymMatrix) -> String {
    let n = m.n();
    let mut out = String::with_capacity(n * n * 20 + 16);
    let _ = writeln!(out, "{n}");
    for i in 0..n {
        for j in 0..n {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:?}", m.get(i, j));
        }
        out.push('\n');
    }
    out
}

/// Nonzero lower-triangle entries in symmetric coordinate form.
pub fn format_matrix_market(m: &SymMatrix) -> String {
    let n = m.n();
    let entries: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|j| (j..n).map(move |i| (i, j)))
        .map(|(i, j)| (i, j, m.get(i, j)))
        .filter(|&(_, _, v)| v != 0.0)
        .collect();
    let mut out = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
    let _ = writeln!(out, "{n} {n} {}", entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(out, "{} {} {:?}", i + 1, j + 1, v);
    }
    out
}

/// Sparsity pattern (off-diagonal pairs, either order) as symmetric pattern
/// MatrixMarket, lower triangle only.
pub fn format_support(n: usize, support: &BTreeSet<(usize, usize)>) -> String {
    let lower: BTreeSet<(usize, usize)> = support
        .iter()
        .map(|&(i, j)| (i.max(j), i.min(j)))
        .collect();
    let mut out = String::from("%%MatrixMarket matrix coordinate pattern symmetric\n");
    let _ = writeln!(out, "{n} {n} {}", lower.len());
    // Column-major order, as MatrixMarket readers conventionally expect.
    let mut ordered: Vec<_> = lower.into_iter().collect();
    ordered.sort_by_key(|&(i, j)| (j, i));
    for (i, j) in ordered {
        let _ = writeln!(out, "{} {}", i + 1, j + 1);
    }
    out
}

/// Off-diagonal pairs (both orders) whose magnitude exceeds `threshold`.
pub fn support_of(m: &SymMatrix, threshold: f64) -> BTreeSet<(usize, usize)> {
    let n = m.n();
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && m.get(i, j).abs() > threshold)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line_of(err: Error) -> usize {
        match err {
            Error::Parse { line, .. } => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn dense_reads_with_comments_and_blank_lines() {
        let m = parse_dense("# header\n2\n\n1.0 0.5\n0.5 2\n").unwrap();
        assert_eq!(m.to_row_major(), vec![1.0, 0.5, 0.5, 2.0]);
        let scalar = parse_dense("1\n1.0\n").unwrap();
        assert_eq!(scalar.get(0, 0), 1.0);
    }

    #[test]
    fn dense_errors_name_the_line() {
        assert_eq!(line_of(parse_dense("2\n1 2\n").unwrap_err()), 3);
        assert_eq!(line_of(parse_dense("2\n1 0\n0 x\n").unwrap_err()), 3);
        assert_eq!(line_of(parse_dense("2\n1 0 0\n0 1\n").unwrap_err()), 2);
        assert_eq!(line_of(parse_dense("2\n1 0\n0 1\n7\n").unwrap_err()), 4);
        assert_eq!(line_of(parse_dense("2\n1 0.5\n0.6 1\n").unwrap_err()), 3);
        assert_eq!(line_of(parse_dense("1\ninf\n").unwrap_err()), 2);
        assert_eq!(line_of(parse_dense("0\n").unwrap_err()), 1);
        assert_eq!(line_of(parse_dense("").unwrap_err()), 1);
        assert_eq!(line_of(parse_dense_limited("5\n", 4).unwrap_err()), 1);
    }

    #[test]
    fn matrix_market_symmetric_and_general() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% c\n3 3 3\n1 1 2.0\n3 1 -0.5\n3 3 1\n";
        let m = parse_matrix_market(text).unwrap();
        assert_eq!(m.get(0, 2), -0.5);
        assert_eq!(m.get(2, 0), -0.5);
        assert_eq!(m.get(1, 1), 0.0);

        let general = "%%MatrixMarket matrix coordinate real general\n2 2 4\n1 1 1\n1 2 3\n2 1 3\n2 2 1\n";
        assert_eq!(parse_matrix_market(general).unwrap().get(1, 0), 3.0);
        let asym = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 3\n";
        assert!(parse_matrix_market(asym).is_err());

        let pattern = "%%MatrixMarket matrix coordinate pattern symmetric\n3 3 1\n2 1\n";
        let m = parse_matrix_market(pattern).unwrap();
        assert_eq!(m.get(0, 1), 1.0);
    }

    #[test]
    fn matrix_market_errors() {
        let bad = [
            ("%%MatrixMarket matrix array real general\n1 1\n1\n", 1),
            ("%%MatrixMarket matrix coordinate real symmetric\n2 3 0\n", 2),
            ("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1.0\n", 3),
            ("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 1.0\n", 3),
            ("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n1 1 2.0\n", 4),
            ("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n", 4),
            ("%%MatrixMarket matrix coordinate real symmetric\n2 2 9\n", 2),
        ];
        for (text, line) in bad {
            assert_eq!(line_of(parse_matrix_market(text).unwrap_err()), line, "{text:?}");
        }
    }

    #[test]
    fn auto_detection() {
        let mm = "%%MatrixMarket matrix coordinate real symmetric\n1 1 1\n1 1 4\n";
        assert_eq!(parse_matrix(mm).unwrap().get(0, 0), 4.0);
        assert_eq!(parse_matrix("1\n4\n").unwrap().get(0, 0), 4.0);
        assert!(parse_matrix_limited("3\n1 0 0\n0 1 0\n0 0 1\n", 2).is_err());
        let big = "%%MatrixMarket matrix coordinate real symmetric\n3 3 0\n";
        assert!(parse_matrix_limited(big, 2).is_err());
        assert!(parse_matrix_limited(big, 3).is_ok());
    }

    #[test]
    fn support_round_trip() {
        let mut s = BTreeSet::new();
        for (i, j) in [(0, 2), (2, 0), (1, 3), (3, 1)] {
            s.insert((i, j));
        }
        let m = parse_matrix_market(&format_support(4, &s)).unwrap();
        assert_eq!(support_of(&m, 0.5), s);
    }

    fn arb_sym() -> impl Strategy<Value = SymMatrix> {
        (1usize..7).prop_flat_map(|n| {
            proptest::collection::vec(
                prop_oneof![
                    Just(0.0),
                    any::<f64>().prop_filter("finite", |v| v.is_finite()),
                    -1e3f64..1e3
                ],
                n * (n + 1) / 2,
            )
            .prop_map(move |tri| {
                let mut m = SymMatrix::zeros(n);
                let mut k = 0;
                for i in 0..n {
                    for j in i..n {
                        m.set_pair(i, j, tri[k]);
                        k += 1;
                    }
                }
                m
            })
        })
    }

    proptest! {
        #[test]
        fn dense_and_matrix_market_round_trip_exactly(m in arb_sym()) {
            prop_assert_eq!(&parse_dense(&format_dense(&m)).unwrap(), &m);
            prop_assert_eq!(&parse_matrix_market(&format_matrix_market(&m)).unwrap(), &m);
        }

        #[test]
        fn parsers_never_panic(text in "\\PC{0,200}") {
            let _ = parse_dense(&text);
            let _ = parse_matrix_market(&text);
        }
    }
}
