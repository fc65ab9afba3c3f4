//! Matrix file formats: numeric CSV (rows are samples, optional single
//! header row) and the raw binary layout
//! `"RIDM" | version u16 | N u64 | D u64 | N*D little-endian f64, row-major`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use ndarray::Array2;
use ritzid_core::DataMatrix;

const MAGIC: &[u8; 4] = b"RIDM";
const VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Binary,
}

pub fn format_for(path: &Path, forced: Option<MatrixFormat>) -> MatrixFormat {
    if let Some(f) = forced {
        return f;
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") | Some("ridm") => MatrixFormat::Binary,
        _ => MatrixFormat::Csv,
    }
}

pub fn read_matrix(path: &Path, forced: Option<MatrixFormat>) -> Result<DataMatrix> {
    match format_for(path, forced) {
        MatrixFormat::Csv => read_csv(path),
        MatrixFormat::Binary => read_binary(path),
    }
    .with_context(|| format!("reading {}", path.display()))
}

pub fn write_matrix(path: &Path, data: &DataMatrix, forced: Option<MatrixFormat>) -> Result<()> {
    match format_for(path, forced) {
        MatrixFormat::Csv => write_csv(path, data),
        MatrixFormat::Binary => write_binary(path, data),
    }
    .with_context(|| format!("writing {}", path.display()))
}

fn parse_row(line: &str) -> std::result::Result<Vec<f64>, (usize, String)> {
    let mut values = Vec::new();
    for (col, field) in line.split(',').enumerate() {
        let trimmed = field.trim();
        match trimmed.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(_) => return Err((col + 1, format!("non-finite value '{trimmed}'"))),
            Err(_) => return Err((col + 1, format!("cannot parse '{trimmed}' as a number"))),
        }
    }
    Ok(values)
}

fn read_csv(path: &Path) -> Result<DataMatrix> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    let mut header_skipped = false;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.with_context(|| format!("line {line_no}: read error"))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_row(&line) {
            Ok(values) => {
                if let Some(w) = width {
                    if values.len() != w {
                        bail!(
                            "line {line_no}: expected {w} columns, found {}",
                            values.len()
                        );
                    }
                } else {
                    width = Some(values.len());
                }
                rows.push(values);
            }
            Err((col, msg)) => {
                // a single non-numeric first row is treated as a header
                if width.is_none() && !header_skipped {
                    header_skipped = true;
                    continue;
                }
                bail!("line {line_no}, column {col}: {msg}");
            }
        }
    }

    let width = width.context("no numeric rows found")?;
    let n = rows.len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let values = Array2::from_shape_vec((n, width), flat).expect("row width enforced above");
    DataMatrix::new(values).map_err(|e| anyhow::anyhow!(e))
}

fn write_csv(path: &Path, data: &DataMatrix) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for row in data.values().rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.write_all(b",")?;
            }
            write!(out, "{v}")?;
            first = false;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn read_binary(path: &Path) -> Result<DataMatrix> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic).context("missing magic")?;
    if &magic != MAGIC {
        bail!("bad magic {:?}, expected \"RIDM\"", magic);
    }
    let mut u16buf = [0u8; 2];
    reader.read_exact(&mut u16buf).context("missing version")?;
    let version = u16::from_le_bytes(u16buf);
    if version != VERSION {
        bail!("unsupported version {version}, expected {VERSION}");
    }
    let mut u64buf = [0u8; 8];
    reader
        .read_exact(&mut u64buf)
        .context("missing row count")?;
    let n = u64::from_le_bytes(u64buf) as usize;
    reader
        .read_exact(&mut u64buf)
        .context("missing column count")?;
    let d = u64::from_le_bytes(u64buf) as usize;
    let total = n
        .checked_mul(d)
        .filter(|&t| t <= (1usize << 32))
        .with_context(|| format!("implausible dimensions {n} x {d}"))?;

    let mut flat = vec![0.0f64; total];
    let mut chunk = [0u8; 8];
    for (i, slot) in flat.iter_mut().enumerate() {
        reader
            .read_exact(&mut chunk)
            .with_context(|| format!("truncated at element {i} of {total}"))?;
        *slot = f64::from_le_bytes(chunk);
    }
    let values = Array2::from_shape_vec((n, d), flat).context("shape mismatch")?;
    DataMatrix::new(values).map_err(|e| anyhow::anyhow!(e))
}

fn write_binary(path: &Path, data: &DataMatrix) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(data.n_samples() as u64).to_le_bytes())?;
    out.write_all(&(data.n_features() as u64).to_le_bytes())?;
    for &v in data.values().iter() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}
