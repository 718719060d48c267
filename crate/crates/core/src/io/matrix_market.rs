//! Matrix Market coordinate format (real/integer, general/symmetric).

use std::path::Path;

use super::{fmt_f64, read_text, write_atomic};
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Serializes `m`; with `symmetric` only the lower triangle is stored.
pub fn to_matrix_market_string(m: &SparseMatrix, symmetric: bool) -> Result<String> {
    if symmetric && !m.is_symmetric() {
        return Err(Error::Format("cannot store a nonsymmetric matrix as symmetric".into()));
    }
    let entries: Vec<_> = m.triplets().filter(|&(r, c, _)| !symmetric || r >= c).collect();
    let kind = if symmetric { "symmetric" } else { "general" };
    let mut s = format!("%%MatrixMarket matrix coordinate real {kind}\n");
    s.push_str(&format!("{} {} {}\n", m.n_rows(), m.n_cols(), entries.len()));
    for (r, c, v) in entries {
        s.push_str(&format!("{} {} {}\n", r + 1, c + 1, fmt_f64(v)));
    }
    Ok(s)
}

pub fn write_matrix_market(path: &Path, m: &SparseMatrix, symmetric: bool) -> Result<()> {
    write_atomic(path, to_matrix_market_string(m, symmetric)?.as_bytes())
}

pub fn read_matrix_market(path: &Path) -> Result<SparseMatrix> {
    parse_matrix_market(&read_text(path)?, path)
}

/// Parses coordinate files; symmetric storage is expanded.
pub fn parse_matrix_market(text: &str, path: &Path) -> Result<SparseMatrix> {
    let err = |line: usize, msg: String| Error::parse(path, line, msg);
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(err(1, format!("malformed header '{header}'")));
    }
    if tokens[2] != "coordinate" {
        return Err(err(1, format!("unsupported format '{}'", tokens[2])));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(err(1, format!("unsupported field '{}'", tokens[3])));
    }
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(err(1, format!("unsupported symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (i, line) in lines {
        let ln = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if f.len() != 3 {
                    return Err(err(ln, "size line needs rows, cols, nnz".into()));
                }
                let parse = |s: &str| s.parse::<usize>().map_err(|_| err(ln, format!("bad size '{s}'")));
                let (r, c, nz) = (parse(f[0])?, parse(f[1])?, parse(f[2])?);
                if symmetric && r != c {
                    return Err(err(ln, "symmetric matrix must be square".into()));
                }
                size = Some((r, c, nz));
            }
            Some((nr, nc, _)) => {
                if f.len() != 3 {
                    return Err(err(ln, "entry needs row, col, value".into()));
                }
                let idx = |s: &str, hi: usize| match s.parse::<usize>() {
                    Ok(v) if v >= 1 && v <= hi => Ok(v - 1),
                    _ => Err(err(ln, format!("index '{s}' out of bounds 1..={hi}"))),
                };
                let (r, c) = (idx(f[0], nr)?, idx(f[1], nc)?);
                let v: f64 = f[2].parse().map_err(|_| err(ln, format!("bad value '{}'", f[2])))?;
                if !v.is_finite() {
                    return Err(err(ln, "non-finite value".into()));
                }
                if symmetric && c > r {
                    return Err(err(ln, "symmetric storage expects the lower triangle".into()));
                }
                triplets.push((r, c, v));
                if symmetric && r != c {
                    triplets.push((c, r, v));
                }
            }
        }
    }
    let (nr, nc, nz) = size.ok_or_else(|| err(1, "missing size line".into()))?;
    let stored = if symmetric {
        triplets.iter().filter(|t| t.0 >= t.1).count()
    } else {
        triplets.len()
    };
    if stored != nz {
        return Err(Error::Format(format!(
            "{}: header declares {nz} entries, found {stored}",
            path.display()
        )));
    }
    SparseMatrix::from_triplets(nr, nc, &triplets)
}
