//! Plain-text complex matrices.
//!
//! ```text
//! 2 3 complex
//! 1.0000000000000000e0,0.0000000000000000e0 ...
//! ```
//!
//! The header gives rows and columns; each following line is one matrix row of
//! space-separated `re,im` pairs. Seventeen significant digits are written, so
//! finite values survive a round trip bit for bit. Vectors are `n 1` matrices.

use std::fmt::Write as _;
use std::path::Path;

use blockcap::{CMatrix, CVector, Complex64};

use crate::CliError;

pub fn format_matrix(a: &CMatrix) -> String {
    let mut out = format!("{} {} complex\n", a.nrows(), a.ncols());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if j > 0 {
                out.push(' ');
            }
            let z = a[(i, j)];
            let _ = write!(out, "{:.16e},{:.16e}", z.re, z.im);
        }
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<CMatrix, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("empty matrix file")?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [rows, cols, "complex"] = fields.as_slice() else {
        return Err(format!("bad header {header:?}, expected \"ROWS COLS complex\""));
    };
    let rows: usize = rows.parse().map_err(|_| format!("bad row count {rows:?}"))?;
    let cols: usize = cols.parse().map_err(|_| format!("bad column count {cols:?}"))?;
    let mut data = Vec::with_capacity(rows * cols);
    for (i, line) in lines.enumerate() {
        if i >= rows {
            return Err(format!("more than {rows} rows"));
        }
        let before = data.len();
        for pair in line.split_whitespace() {
            let (re, im) = pair.split_once(',').ok_or_else(|| format!("row {i}: entry {pair:?} is not re,im"))?;
            let re: f64 = re.parse().map_err(|_| format!("row {i}: bad number {re:?}"))?;
            let im: f64 = im.parse().map_err(|_| format!("row {i}: bad number {im:?}"))?;
            data.push(Complex64::new(re, im));
        }
        if data.len() - before != cols {
            return Err(format!("row {i} has {} entries, expected {cols}", data.len() - before));
        }
    }
    if data.len() != rows * cols {
        return Err(format!("expected {rows} rows, found {}", data.len() / cols.max(1)));
    }
    Ok(CMatrix::from_row_slice(rows, cols, &data))
}

pub fn read_matrix(path: &Path) -> Result<CMatrix, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    parse_matrix(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn read_vector(path: &Path) -> Result<CVector, CliError> {
    let a = read_matrix(path)?;
    if a.ncols() != 1 {
        return Err(CliError::Usage(format!("{}: expected a single column, found {}", path.display(), a.ncols())));
    }
    Ok(a.column(0).into_owned())
}

pub fn format_vector(x: &CVector) -> String {
    format_matrix(&CMatrix::from_column_slice(x.len(), 1, x.as_slice()))
}
