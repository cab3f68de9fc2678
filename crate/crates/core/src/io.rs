//! CSV and JSON persistence. Floats are written with 17 significant digits
//! so every value round-trips exactly.

use nalgebra::DMatrix;
use serde::{de::DeserializeOwned, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quantum::TrajectoryRecord;
use crate::semiclassical::ClassicalRecord;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(p) = path.parent() {
        fs::create_dir_all(p)?;
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Write a table whose cells are already formatted.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Header plus rows of an arbitrary CSV file.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn parse(cell: &str, path: &Path) -> Result<f64> {
    cell.trim()
        .parse()
        .map_err(|_| Error::validation(format!("{}: cannot parse `{cell}` as a number", path.display())))
}

/// Row-major matrix without a header.
pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for r in 0..m.nrows() {
        w.write_record((0..m.ncols()).map(|c| fmt_f64(m[(r, c)])))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(|c| parse(c, path)).collect::<Result<_>>()?);
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::validation(format!("{}: not a square matrix", path.display())));
    }
    Ok(DMatrix::from_fn(n, n, |a, b| rows[a][b]))
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}_{i}"))
}

/// Columns: `t_us`, then `x_i`, `y_i`, `z_i`, `entropy_i`, `s_i` per spin,
/// then `energy` when recorded.
pub fn write_trajectory_csv(path: &Path, rec: &TrajectoryRecord) -> Result<()> {
    let n = rec.n;
    let mut header = vec!["t_us".to_string()];
    for p in ["x", "y", "z", "entropy", "s"] {
        header.extend(indexed(p, n));
    }
    if rec.energy.is_some() {
        header.push("energy".to_string());
    }
    let rows: Vec<Vec<String>> = (0..rec.times.len())
        .map(|k| {
            let mut row = vec![fmt_f64(rec.times[k] * 1e6)];
            for series in [&rec.x, &rec.y, &rec.z, &rec.entropy, &rec.s] {
                row.extend(series[k].iter().map(|&v| fmt_f64(v)));
            }
            if let Some(e) = &rec.energy {
                row.push(fmt_f64(e[k]));
            }
            row
        })
        .collect();
    write_table(path, &header, &rows)
}

/// Columns: `t_us`, `x_i`, `y_i`, `z_i`, then `energy` when recorded.
pub fn write_classical_csv(path: &Path, rec: &ClassicalRecord) -> Result<()> {
    let n = rec.x.first().map_or(0, Vec::len);
    let mut header = vec!["t_us".to_string()];
    for p in ["x", "y", "z"] {
        header.extend(indexed(p, n));
    }
    if rec.energy.is_some() {
        header.push("energy".to_string());
    }
    let rows: Vec<Vec<String>> = (0..rec.times.len())
        .map(|k| {
            let mut row = vec![fmt_f64(rec.times[k] * 1e6)];
            for series in [&rec.x, &rec.y, &rec.z] {
                row.extend(series[k].iter().map(|&v| fmt_f64(v)));
            }
            if let Some(e) = &rec.energy {
                row.push(fmt_f64(e[k]));
            }
            row
        })
        .collect();
    write_table(path, &header, &rows)
}

/// Sample times (seconds) and the `{prefix}_i` columns of a trajectory file.
pub fn read_series(path: &Path, prefix: &str) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let (header, rows) = read_table(path)?;
    if header.first().map(String::as_str) != Some("t_us") {
        return Err(Error::validation(format!("{}: missing t_us column", path.display())));
    }
    let tag = format!("{prefix}_");
    let cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.strip_prefix(&tag).is_some_and(|rest| rest.parse::<usize>().is_ok()))
        .map(|(i, _)| i)
        .collect();
    if cols.is_empty() {
        return Err(Error::validation(format!("{}: no {tag}i columns", path.display())));
    }
    let mut times = Vec::with_capacity(rows.len());
    let mut out = Vec::with_capacity(rows.len());
    for r in &rows {
        times.push(parse(&r[0], path)? * 1e-6);
        out.push(cols.iter().map(|&c| parse(&r[c], path)).collect::<Result<Vec<_>>>()?);
    }
    Ok((times, out))
}

/// The single `energy` column, when present.
pub fn read_energy(path: &Path) -> Result<Option<Vec<f64>>> {
    let (header, rows) = read_table(path)?;
    match header.iter().position(|h| h == "energy") {
        None => Ok(None),
        Some(c) => rows.iter().map(|r| parse(&r[c], path)).collect::<Result<Vec<_>>>().map(Some),
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let m = DMatrix::from_row_slice(2, 2, &[0.1, 1.0 / 3.0, 1.0 / 3.0, -2.5e-300]);
        write_matrix_csv(&p, &m).unwrap();
        assert_eq!(read_matrix_csv(&p).unwrap(), m);
    }
}
