//! MatrixMarket coordinate files (real/integer, general/symmetric).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Dense storage limit for parsed matrices, in entries.
pub const MAX_DENSE_ENTRIES: usize = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_header(line: &str) -> Result<Symmetry> {
    let tokens: Vec<String> = line
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(
            1,
            "expected '%%MatrixMarket matrix <format> <field> <symmetry>'",
        ));
    }
    if tokens[2] != "coordinate" {
        return Err(Error::UnsupportedField(format!("format '{}'", tokens[2])));
    }
    match tokens[3].as_str() {
        "real" | "integer" => {}
        other => return Err(Error::UnsupportedField(format!("field '{other}'"))),
    }
    match tokens[4].as_str() {
        "general" => Ok(Symmetry::General),
        "symmetric" => Ok(Symmetry::Symmetric),
        other => Err(Error::UnsupportedField(format!("symmetry '{other}'"))),
    }
}

fn parse_index(tok: &str, bound: usize, line: usize) -> Result<usize> {
    let i: usize = tok
        .parse()
        .map_err(|_| parse_err(line, format!("bad index '{tok}'")))?;
    if i == 0 || i > bound {
        return Err(parse_err(line, format!("index {i} outside 1..={bound}")));
    }
    Ok(i - 1)
}

/// Parse MatrixMarket text into a dense matrix. Symmetric files are mirrored;
/// repeated entries are summed.
pub fn parse_matrix_market(text: &str) -> Result<Mat> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let symmetry = parse_header(header)?;
    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (ln, size) = body
        .next()
        .ok_or_else(|| parse_err(text.lines().count() + 1, "missing size line"))?;
    let dims: Vec<&str> = size.split_whitespace().collect();
    if dims.len() != 3 {
        return Err(parse_err(ln, "size line must be 'rows cols nonzeros'"));
    }
    let parse_count = |t: &str| {
        t.parse::<usize>()
            .map_err(|_| parse_err(ln, format!("bad count '{t}'")))
    };
    let (m, n, nnz) = (
        parse_count(dims[0])?,
        parse_count(dims[1])?,
        parse_count(dims[2])?,
    );
    if m.checked_mul(n).map_or(true, |e| e > MAX_DENSE_ENTRIES) {
        return Err(parse_err(
            ln,
            format!("{m}x{n} exceeds the dense storage limit"),
        ));
    }
    if symmetry == Symmetry::Symmetric && m != n {
        return Err(parse_err(ln, "symmetric matrix must be square"));
    }
    let mut a = Mat::zeros(m, n);
    let mut seen = 0usize;
    for (ln, l) in body {
        if seen == nnz {
            return Err(parse_err(ln, "more entries than declared"));
        }
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 3 {
            return Err(parse_err(ln, "entry must be 'row col value'"));
        }
        let i = parse_index(t[0], m, ln)?;
        let j = parse_index(t[1], n, ln)?;
        let v: f64 = t[2]
            .parse()
            .map_err(|_| parse_err(ln, format!("bad value '{}'", t[2])))?;
        if !v.is_finite() {
            return Err(parse_err(ln, "value must be finite"));
        }
        a[(i, j)] += v;
        if symmetry == Symmetry::Symmetric && i != j {
            a[(j, i)] += v;
        }
        seen += 1;
    }
    if seen != nnz {
        return Err(parse_err(
            text.lines().count() + 1,
            format!("expected {nnz} entries, found {seen}"),
        ));
    }
    Ok(a)
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<Mat> {
    parse_matrix_market(&std::fs::read_to_string(path)?)
}

/// Coordinate real general text holding the nonzero entries of `a`.
pub fn format_matrix_market(a: &Mat) -> String {
    let nnz = a.iter().filter(|v| **v != 0.0).count();
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", a.nrows(), a.ncols(), nnz);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let v = a[(i, j)];
            if v != 0.0 {
                let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, v);
            }
        }
    }
    out
}

pub fn write_matrix_market(path: impl AsRef<Path>, a: &Mat) -> Result<()> {
    std::fs::write(path, format_matrix_market(a))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn general_diagonal() {
        let a = parse_matrix_market(
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 2 2.0\n",
        )
        .unwrap();
        assert_eq!(a, Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]));
    }

    #[test]
    fn symmetric_lower_triangle_is_mirrored() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 3\n1 1 4\n3 1 -1.5\n2 2 5\n";
        let a = parse_matrix_market(text).unwrap();
        assert_eq!(a[(0, 2)], -1.5);
        assert_eq!(a[(2, 0)], -1.5);
        assert_eq!(a, a.transpose());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e =
            parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 1\n0 1 1.0\n")
                .unwrap_err();
        assert_eq!(
            e,
            Error::Parse {
                line: 3,
                msg: "index 0 outside 1..=2".into()
            }
        );
        for field in ["complex", "pattern"] {
            let text = format!("%%MatrixMarket matrix coordinate {field} general\n1 1 0\n");
            assert!(matches!(
                parse_matrix_market(&text),
                Err(Error::UnsupportedField(_))
            ));
        }
        assert!(matches!(
            parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn round_trip_is_exact() {
        let a = Mat::from_row_slice(2, 3, &[0.1, 0.0, -1e-300, 1.0 / 3.0, 7.0, 0.0]);
        assert_eq!(parse_matrix_market(&format_matrix_market(&a)).unwrap(), a);
    }
}
