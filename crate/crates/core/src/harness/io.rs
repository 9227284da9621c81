//! Matrix files.
//!
//! Binary layout: magic `PRX1`, `u32` version (1), `u64` rows, `u64` cols,
//! then `rows·cols` little-endian `f64` values in row-major order. Paths
//! ending in `.csv` use text instead: a `rows,cols` line followed by one
//! comma-separated line per row.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

const MAGIC: &[u8; 4] = b"PRX1";
const VERSION: u32 = 1;
const HEADER_LEN: u64 = 24;

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let path = path.as_ref();
    let bytes = if is_csv(path) { to_csv(m).into_bytes() } else { encode(m) };
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    if is_csv(path) {
        parse_csv(&fs::read_to_string(path)?)
    } else {
        decode(&fs::read(path)?)
    }
}

pub fn encode(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN as usize + 8 * m.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Matrix> {
    let found = bytes.len() as u64;
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if found < HEADER_LEN {
        return Err(Error::Truncated { expected: HEADER_LEN, found });
    }
    let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let (rows, cols) = (u64_at(8), u64_at(16));
    let overflow = Error::DimensionOverflow { rows, cols };
    let payload = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or(overflow)?;
    if usize::try_from(payload).is_err() {
        return Err(Error::DimensionOverflow { rows, cols });
    }
    if found < payload {
        return Err(Error::Truncated { expected: payload, found });
    }
    if found > payload {
        return Err(Error::InvalidData(format!(
            "{} trailing bytes after matrix data",
            found - payload
        )));
    }
    let data = bytes[HEADER_LEN as usize..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Matrix::new(rows as usize, cols as usize, data)
}

/// CSV text; values use the shortest representation that reads back to the
/// same bits.
pub fn to_csv(m: &Matrix) -> String {
    let mut s = format!("{},{}\n", m.rows(), m.cols());
    for r in 0..m.rows() {
        let line: Vec<String> = m.row(r).iter().map(|v| v.to_string()).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

pub fn parse_csv(text: &str) -> Result<Matrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (line, header) = lines.next().ok_or(Error::Csv { line: 1, msg: "empty file".into() })?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Csv { line, msg: format!("bad dimension line: {e}") })?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Csv { line, msg: "dimension line must be rows,cols".into() });
    };
    let mut data = Vec::with_capacity(rows.saturating_mul(cols).min(1 << 24));
    let mut seen = 0;
    for (line, l) in lines {
        let row: Vec<f64> = l
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Csv { line, msg: e.to_string() })?;
        if row.len() != cols {
            return Err(Error::Csv {
                line,
                msg: format!("expected {cols} values, found {}", row.len()),
            });
        }
        data.extend(row);
        seen += 1;
    }
    if seen != rows {
        return Err(Error::Csv {
            line: text.lines().count(),
            msg: format!("expected {rows} rows, found {seen}"),
        });
    }
    Matrix::new(rows, cols, data)
}
