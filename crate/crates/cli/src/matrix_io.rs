//! Plain CSV matrices: one row per line, no header, '.' decimal separator.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use ginvkit::Matrix;

pub fn parse_matrix<R: Read>(input: R, source: &str) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("{source}: malformed CSV"))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let mut row = Vec::with_capacity(record.len());
        for (k, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                anyhow!("{source}:{line}:{}: cannot parse {field:?} as a number", k + 1)
            })?;
            if !value.is_finite() {
                bail!("{source}:{line}:{}: non-finite value {field:?}", k + 1);
            }
            row.push(value);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                bail!(
                    "{source}:{line}: expected {} columns, found {}",
                    first.len(),
                    row.len()
                );
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{source}: no matrix rows found");
    }
    let cols = rows[0].len();
    Ok(Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    parse_matrix(file, &path.display().to_string())
}

/// Seventeen significant digits, enough to round-trip every `f64`.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_matrix_to<W: Write>(out: W, m: &Matrix) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for i in 0..m.nrows() {
        writer.write_record(m.row(i).iter().map(|&x| format_value(x)))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_matrix_to(file, m)
}
