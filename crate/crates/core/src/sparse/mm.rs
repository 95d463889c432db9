//! Matrix Market coordinate import/export for symmetric matrices and dense
//! vectors. Used for debugging dumps and oracle cross-checks.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{SparseError, SparseSymmetricMatrix};

#[derive(Debug)]
pub enum MmError {
    Io(std::io::Error),
    Parse { line: usize, message: String },
    Matrix(SparseError),
}

impl fmt::Display for MmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MmError::Io(e) => write!(f, "io error: {e}"),
            MmError::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            MmError::Matrix(e) => write!(f, "matrix error: {e}"),
        }
    }
}

impl std::error::Error for MmError {}

impl From<std::io::Error> for MmError {
    fn from(e: std::io::Error) -> Self {
        MmError::Io(e)
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> MmError {
    MmError::Parse {
        line,
        message: message.into(),
    }
}

/// Write a symmetric matrix in coordinate format (lower triangle).
pub fn write_matrix(mat: &SparseSymmetricMatrix, path: &Path) -> Result<(), MmError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
    let mut entries = Vec::new();
    for i in 0..mat.dim() {
        let (cols, vals) = mat.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j <= i {
                entries.push((i, j, v));
            }
        }
    }
    writeln!(out, "{} {} {}", mat.dim(), mat.dim(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

/// Read a coordinate-format matrix. `symmetric` files are mirrored; `general`
/// files must contain a symmetric entry set.
pub fn read_matrix(path: &Path) -> Result<SparseSymmetricMatrix, MmError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))?
        .1
        .map(|h| (0, h))
        .map_err(MmError::Io)?;
    let header_lc = header.to_lowercase();
    if !header_lc.starts_with("%%matrixmarket matrix coordinate real") {
        return Err(parse_err(1, "expected coordinate real matrix header"));
    }
    let symmetric = header_lc.contains("symmetric");

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for (lineno, line) in lines {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(lineno + 1, "expected 'rows cols nnz'"));
                }
                let rows = fields[0]
                    .parse()
                    .map_err(|_| parse_err(lineno + 1, "bad row count"))?;
                let cols = fields[1]
                    .parse()
                    .map_err(|_| parse_err(lineno + 1, "bad col count"))?;
                let nnz = fields[2]
                    .parse()
                    .map_err(|_| parse_err(lineno + 1, "bad nnz count"))?;
                if rows != cols {
                    return Err(parse_err(lineno + 1, "matrix must be square"));
                }
                size = Some((rows, cols, nnz));
            }
            Some((rows, _, _)) => {
                if fields.len() != 3 {
                    return Err(parse_err(lineno + 1, "expected 'i j value'"));
                }
                let i: usize = fields[0]
                    .parse()
                    .map_err(|_| parse_err(lineno + 1, "bad row index"))?;
                let j: usize = fields[1]
                    .parse()
                    .map_err(|_| parse_err(lineno + 1, "bad col index"))?;
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|_| parse_err(lineno + 1, "bad value"))?;
                if i == 0 || j == 0 || i > rows || j > rows {
                    return Err(parse_err(lineno + 1, "index out of range"));
                }
                // General files list both (i,j) and (j,i); keep one.
                if symmetric || j <= i {
                    triplets.push((i - 1, j - 1, v));
                }
            }
        }
    }
    let (rows, _, _) = size.ok_or_else(|| parse_err(1, "missing size line"))?;
    SparseSymmetricMatrix::from_triplets(rows, &triplets).map_err(MmError::Matrix)
}

/// Write a dense vector as an n-by-1 array.
pub fn write_vector(v: &[f64], path: &Path) -> Result<(), MmError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "%%MatrixMarket matrix array real general")?;
    writeln!(out, "{} 1", v.len())?;
    for x in v {
        writeln!(out, "{:.17e}", x)?;
    }
    Ok(())
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>, MmError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut values = Vec::new();
    let mut expect: Option<usize> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('%') {
            continue;
        }
        if expect.is_none() {
            let fields: Vec<&str> = text.split_whitespace().collect();
            if fields.len() != 2 || fields[1] != "1" {
                return Err(parse_err(lineno + 1, "expected 'n 1' array size"));
            }
            expect = Some(
                fields[0]
                    .parse()
                    .map_err(|_| parse_err(lineno + 1, "bad length"))?,
            );
        } else {
            values.push(
                text.parse()
                    .map_err(|_| parse_err(lineno + 1, "bad value"))?,
            );
        }
    }
    match expect {
        Some(n) if n == values.len() => Ok(values),
        Some(n) => Err(parse_err(0, format!("expected {n} values, got {}", values.len()))),
        None => Err(parse_err(1, "missing size line")),
    }
}
