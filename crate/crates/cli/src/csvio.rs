//! CSV output for fields and tables. Floats carry 17 significant digits so
//! a reload reproduces the in-memory values bit for bit.

use coexist_core::grid::{Grid, ScalarField};
use std::fs;
use std::io::{self, Write};
use std::path::Path;

/// Format an f64 with enough digits to round-trip exactly.
pub fn full_precision(v: f64) -> String {
    format!("{v:.17e}")
}

/// Write interior-node rows `x[,y],<columns...>` with a one-line header.
pub fn write_fields_csv(
    path: &Path,
    grid: &Grid,
    columns: &[(String, &ScalarField)],
) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    let coord_header = if grid.dimension() == 1 { "x" } else { "x,y" };
    let names: Vec<&str> = columns.iter().map(|(n, _)| n.as_str()).collect();
    writeln!(out, "{coord_header},{}", names.join(","))?;
    for k in 0..grid.node_count() {
        let coords = grid.coords(k);
        let mut row: Vec<String> = coords.iter().map(|c| full_precision(*c)).collect();
        for (_, field) in columns {
            row.push(full_precision(field.values()[k]));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()
}

/// Reload a fields CSV: header names (coordinates included) plus rows of
/// parsed values.
pub fn read_csv(path: &Path) -> io::Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "empty CSV"))?
        .split(',')
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                format!("row {}: {e}", i + 2),
            )
        })?);
    }
    Ok((header, rows))
}

/// Write a generic table (sweep output); cells are preformatted strings so
/// unavailable entries stay empty.
pub fn write_table_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()
}
