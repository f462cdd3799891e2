//! MatrixMarket coordinate I/O and TSV export of factors.
//!
//! Only `matrix coordinate {real|integer} general` is accepted. Indices are
//! 1-based on disk and 0-based in memory.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{NmfError, Result};
use crate::factor::DenseFactor;
use crate::sparse::SparseMatrix;

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| NmfError::io(path, e))?;
    read_matrix_market(BufReader::new(file)).map_err(|e| match e {
        NmfError::Io { source, .. } => NmfError::io(path, source),
        other => other,
    })
}

pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<SparseMatrix> {
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines.next().ok_or(NmfError::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let header = header.map_err(|e| NmfError::io("<reader>", e))?;
    parse_header(&header)?;

    let mut dims: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (lineno, line) in lines {
        let line = line.map_err(|e| NmfError::io("<reader>", e))?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        match dims {
            None => {
                let n_rows = parse_field::<usize>(fields.next(), lineno, "row count")?;
                let n_cols = parse_field::<usize>(fields.next(), lineno, "column count")?;
                let nnz = parse_field::<usize>(fields.next(), lineno, "entry count")?;
                if fields.next().is_some() {
                    return Err(parse_err(lineno, "trailing fields in size line"));
                }
                dims = Some((n_rows, n_cols, nnz));
                triplets.reserve(nnz);
            }
            Some((n_rows, n_cols, _)) => {
                let i = parse_field::<usize>(fields.next(), lineno, "row index")?;
                let j = parse_field::<usize>(fields.next(), lineno, "column index")?;
                let v = parse_field::<f64>(fields.next(), lineno, "value")?;
                if fields.next().is_some() {
                    return Err(parse_err(lineno, "trailing fields in entry"));
                }
                if i == 0 || i > n_rows || j == 0 || j > n_cols {
                    return Err(parse_err(
                        lineno,
                        format!("index ({i}, {j}) outside {n_rows}x{n_cols}"),
                    ));
                }
                if v < 0.0 {
                    return Err(NmfError::NegativeEntry {
                        row: i - 1,
                        col: j - 1,
                        value: v,
                    });
                }
                triplets.push((i - 1, j - 1, v));
            }
        }
    }

    let (n_rows, n_cols, nnz) = dims.ok_or_else(|| parse_err(1, "missing size line"))?;
    if triplets.len() != nnz {
        return Err(parse_err(
            0,
            format!("size line declares {nnz} entries, found {}", triplets.len()),
        ));
    }
    SparseMatrix::from_triplets(n_rows, n_cols, &triplets)
}

fn parse_header(header: &str) -> Result<()> {
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix coordinate <field> general'"));
    }
    if tokens[1] != "matrix" || tokens[2] != "coordinate" {
        return Err(parse_err(1, "only 'matrix coordinate' is supported"));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(parse_err(1, format!("unsupported field '{}'", tokens[3])));
    }
    if tokens[4] != "general" {
        return Err(parse_err(1, format!("unsupported symmetry '{}'", tokens[4])));
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, line: usize, what: &str) -> Result<T> {
    let field = field.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    field
        .parse::<T>()
        .map_err(|_| parse_err(line, format!("bad {what} '{field}'")))
}

fn parse_err(line: usize, msg: impl Into<String>) -> NmfError {
    NmfError::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn write_matrix_market<W: Write>(out: &mut W, m: &SparseMatrix) -> std::io::Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", m.n_rows(), m.n_cols(), m.nnz())?;
    for (i, j, v) in m.triplets() {
        // `{:e}` is the shortest round-trip representation
        writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn save_matrix_market(path: impl AsRef<Path>, m: &SparseMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| NmfError::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_matrix_market(&mut out, m)
        .and_then(|_| out.flush())
        .map_err(|e| NmfError::io(path, e))
}

/// Writes the nonzeros of an `r × n_items` factor as a MatrixMarket
/// coordinate file with `r` rows.
pub fn save_factor_matrix_market(
    path: impl AsRef<Path>,
    factor: &DenseFactor,
    comment: &str,
) -> Result<()> {
    let path = path.as_ref();
    let write = || -> std::io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        for line in comment.lines() {
            writeln!(out, "% {line}")?;
        }
        writeln!(
            out,
            "{} {} {}",
            factor.n_latent(),
            factor.n_items(),
            factor.nnz()
        )?;
        // row-major traversal keeps the file ordered by latent component
        for k in 0..factor.n_latent() {
            for i in 0..factor.n_items() {
                let v = factor.get(k, i);
                if v != 0.0 {
                    writeln!(out, "{} {} {:e}", k + 1, i + 1, v)?;
                }
            }
        }
        out.flush()
    };
    write().map_err(|e| NmfError::io(path, e))
}

/// Writes `r` tab-separated lines, one per latent component.
pub fn save_factor_tsv(path: impl AsRef<Path>, factor: &DenseFactor) -> Result<()> {
    let path = path.as_ref();
    let write = || -> std::io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for k in 0..factor.n_latent() {
            for i in 0..factor.n_items() {
                if i > 0 {
                    out.write_all(b"\t")?;
                }
                write!(out, "{:e}", factor.get(k, i))?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    };
    write().map_err(|e| NmfError::io(path, e))
}
