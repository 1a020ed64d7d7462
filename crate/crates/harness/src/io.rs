//! CSV and JSON artifacts. CSV: comma delimiter, header row, '.' decimal
//! point, shortest round-trip float formatting. JSON: pretty-printed with
//! struct field order as declared.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use wkam_core::grid::{make_grid, PeriodicGrid, ValueField};
use wkam_core::operators::HistoryRow;

use crate::error::{HarnessError, Result};
use crate::rates::DominanceRow;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path, e: csv::Error) -> HarnessError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => HarnessError::Io { path: path.to_path_buf(), source },
        other => HarnessError::FieldFormat { path: path.to_path_buf(), reason: format!("{other:?}") },
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Writes a header and rows of already formatted cells.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// `x_index,value` in 1D, `x_index,y_index,value` in 2D.
pub fn write_field_csv(path: &Path, field: &ValueField) -> Result<()> {
    let g = field.grid();
    let header: &[&str] = if g.dim() == 1 { &["x_index", "value"] } else { &["x_index", "y_index", "value"] };
    let rows = field.samples().iter().enumerate().map(|(i, v)| {
        let [a, b] = g.axis_indices(i);
        let mut r = vec![a.to_string()];
        if g.dim() == 2 {
            r.push(b.to_string());
        }
        r.push(num(*v));
        r
    });
    write_table(path, header, rows)
}

/// Reads a field written by `write_field_csv`; the grid is inferred from
/// the header and the row count, and every node must appear exactly once.
pub fn read_field_csv(path: &Path) -> Result<ValueField> {
    let bad = |reason: String| HarnessError::FieldFormat { path: path.to_path_buf(), reason };
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| csv_err(path, e))?.iter().map(str::to_string).collect();
    let dim = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["x_index", "value"] => 1,
        ["x_index", "y_index", "value"] => 2,
        other => return Err(bad(format!("unexpected header {other:?}"))),
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let idx: Vec<usize> = (0..dim)
            .map(|k| rec[k].trim().parse::<usize>().map_err(|e| bad(format!("index `{}`: {e}", &rec[k]))))
            .collect::<Result<_>>()?;
        let v: f64 = rec[dim].trim().parse().map_err(|e| bad(format!("value `{}`: {e}", &rec[dim])))?;
        rows.push((idx, v));
    }
    let count = rows.len();
    let res = if dim == 1 { count } else { (count as f64).sqrt().round() as usize };
    if res.pow(dim as u32) != count {
        return Err(bad(format!("{count} rows do not form a square grid")));
    }
    let grid: PeriodicGrid = make_grid(dim, res).map_err(|e| bad(e.to_string()))?;
    let mut samples = vec![f64::NAN; count];
    for (idx, v) in rows {
        if idx.iter().any(|i| *i >= res) {
            return Err(bad(format!("index {idx:?} outside a grid of resolution {res}")));
        }
        let flat = grid.wrap_index([idx[0] as i64, idx.get(1).copied().unwrap_or(0) as i64]);
        if !samples[flat].is_nan() {
            return Err(bad(format!("node {idx:?} listed twice")));
        }
        samples[flat] = v;
    }
    ValueField::new(grid, samples, 0.0).map_err(|e| bad(e.to_string()))
}

pub fn write_history_csv(path: &Path, rows: &[HistoryRow]) -> Result<()> {
    write_table(
        path,
        &["t", "residual", "c_estimate"],
        rows.iter().map(|r| vec![num(r.t), num(r.residual), num(r.c_estimate)]),
    )
}

pub fn write_dominance_csv(path: &Path, rows: &[DominanceRow]) -> Result<()> {
    write_table(
        path,
        &["t", "dist_classic", "dist_windowed"],
        rows.iter().map(|r| vec![num(r.t), num(r.dist_classic), num(r.dist_windowed)]),
    )
}

/// Output directory plus file name.
pub fn artifact(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
