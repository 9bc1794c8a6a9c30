//! Matrix Market coordinate and array formats.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::csr::CsrMatrix;
use crate::error::{Error, Result};

/// Writes `m` in coordinate format; symmetric matrices store the lower triangle.
pub fn write_matrix_market(path: &Path, m: &CsrMatrix) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let sym = m.is_symmetric_flagged();
    let mut entries = Vec::new();
    for r in 0..m.nrows() {
        let (cols, vals) = m.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            if !sym || c <= r {
                entries.push((r, c, v));
            }
        }
    }
    writeln!(w, "%%MatrixMarket matrix coordinate real {}", if sym { "symmetric" } else { "general" }).map_err(io)?;
    writeln!(w, "{} {} {}", m.nrows(), m.ncols(), entries.len()).map_err(io)?;
    for (r, c, v) in entries {
        writeln!(w, "{} {} {:.17e}", r + 1, c + 1, v).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn parse_err(path: &Path, line: usize, msg: &str) -> Error {
    Error::Parse(format!("{}:{}: {}", path.display(), line, msg))
}

/// Reads a real coordinate matrix (general or symmetric).
pub fn read_matrix_market(path: &Path) -> Result<CsrMatrix> {
    let io = |e| Error::io(path, e);
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let header = header.map_err(io)?.to_ascii_lowercase();
    let words: Vec<&str> = header.split_whitespace().collect();
    if words.len() < 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" || words[2] != "coordinate" {
        return Err(parse_err(path, 1, "expected a coordinate MatrixMarket header"));
    }
    if words[3] != "real" && words[3] != "integer" {
        return Err(parse_err(path, 1, "only real matrices are supported"));
    }
    let symmetric = match words[4] {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(path, 1, &format!("unsupported symmetry '{other}'"))),
    };
    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (ln, line) in lines {
        let line = line.map_err(io)?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        if size.is_none() {
            if f.len() != 3 {
                return Err(parse_err(path, ln + 1, "malformed size line"));
            }
            let p = |s: &str| s.parse::<usize>().map_err(|_| parse_err(path, ln + 1, "bad integer"));
            size = Some((p(f[0])?, p(f[1])?, p(f[2])?));
            triplets.reserve(size.unwrap().2 * if symmetric { 2 } else { 1 });
            continue;
        }
        if f.len() != 3 {
            return Err(parse_err(path, ln + 1, "malformed entry"));
        }
        let (nr, nc, _) = size.unwrap();
        let r: usize = f[0].parse().map_err(|_| parse_err(path, ln + 1, "bad row"))?;
        let c: usize = f[1].parse().map_err(|_| parse_err(path, ln + 1, "bad column"))?;
        let v: f64 = f[2].parse().map_err(|_| parse_err(path, ln + 1, "bad value"))?;
        if r == 0 || c == 0 || r > nr || c > nc {
            return Err(parse_err(path, ln + 1, "index out of range"));
        }
        triplets.push((r - 1, c - 1, v));
        if symmetric && r != c {
            triplets.push((c - 1, r - 1, v));
        }
    }
    let (nr, nc, nnz) = size.ok_or_else(|| parse_err(path, 1, "missing size line"))?;
    let stored = if symmetric { triplets.iter().filter(|t| t.0 >= t.1).count() } else { triplets.len() };
    if stored != nnz {
        return Err(parse_err(path, 1, &format!("expected {nnz} entries, found {stored}")));
    }
    CsrMatrix::from_triplets(nr, nc, &triplets, symmetric)
}

/// Writes a dense vector in array format.
pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "%%MatrixMarket matrix array real general").map_err(io)?;
    writeln!(w, "{} 1", v.len()).map_err(io)?;
    for x in v {
        writeln!(w, "{:.17e}", x).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a dense column vector in array format.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let io = |e| Error::io(path, e);
    let text = std::fs::read_to_string(path).map_err(io)?;
    let mut it = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('%'));
    let (ln, size) = it.next().ok_or_else(|| parse_err(path, 1, "missing size line"))?;
    let f: Vec<&str> = size.split_whitespace().collect();
    if f.len() != 2 || f[1] != "1" {
        return Err(parse_err(path, ln + 1, "expected 'n 1'"));
    }
    let n: usize = f[0].parse().map_err(|_| parse_err(path, ln + 1, "bad length"))?;
    let v = it
        .map(|(ln, l)| l.trim().parse::<f64>().map_err(|_| parse_err(path, ln + 1, "bad value")))
        .collect::<Result<Vec<f64>>>()?;
    if v.len() != n {
        return Err(parse_err(path, 1, &format!("expected {n} values, found {}", v.len())));
    }
    Ok(v)
}
