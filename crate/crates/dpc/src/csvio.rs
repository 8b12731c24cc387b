//! Comma-separated panels: one header row of series names, then one row per period.
//!
//! Lines starting with `#` are comments. Files written here begin with a
//! `# dpc-panel v1` line.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use dpc_core::SeriesPanel;
use nalgebra::DMatrix;

use crate::CliError;

pub const PANEL_HEADER: &str = "# dpc-panel v1";

/// Parses a panel from CSV text. `source` names the origin in error messages.
pub fn parse_panel(text: &[u8], source: &str) -> Result<SeriesPanel, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text);
    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{source}: {e}")))?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(CliError::Input(format!("{source}: missing header row")));
    }
    let labels: Vec<String> = headers.iter().map(str::to_string).collect();
    let m = labels.len();
    let mut cells = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| record_error(source, m, e))?;
        let line = record.position().map_or(0, |p| p.line());
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                CliError::Input(format!("{source}: line {line}, column {} (`{}`): cannot parse `{cell}` as a number", j + 1, labels[j]))
            })?;
            if !v.is_finite() {
                return Err(CliError::Input(format!(
                    "{source}: line {line}, column {} (`{}`): non-finite value `{cell}`",
                    j + 1,
                    labels[j]
                )));
            }
            cells.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::Input(format!("{source}: no data rows")));
    }
    let values = DMatrix::from_row_slice(rows, m, &cells);
    SeriesPanel::new(values, labels).map_err(|e| CliError::Input(format!("{source}: {e}")))
}

fn record_error(source: &str, m: usize, err: csv::Error) -> CliError {
    match err.kind() {
        csv::ErrorKind::UnequalLengths { pos, len, .. } => {
            let line = pos.as_ref().map_or(0, |p| p.line());
            CliError::Input(format!("{source}: line {line}: expected {m} fields, found {len}"))
        }
        _ => CliError::Input(format!("{source}: {err}")),
    }
}

pub fn read_panel(path: &Path) -> Result<(SeriesPanel, Vec<u8>), CliError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| CliError::io(path, e))?;
    let panel = parse_panel(&bytes, &path.display().to_string())?;
    Ok((panel, bytes))
}

/// Writes `values` under `labels`, using the shortest decimal that round-trips.
pub fn write_matrix<W: Write>(out: W, labels: &[String], values: &DMatrix<f64>) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    writeln!(out, "{PANEL_HEADER}")?;
    let mut writer = csv::Writer::from_writer(&mut out);
    writer.write_record(labels)?;
    let mut row = Vec::with_capacity(values.ncols());
    for t in 0..values.nrows() {
        row.clear();
        row.extend((0..values.ncols()).map(|j| values[(t, j)].to_string()));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    drop(writer);
    out.flush()
}

pub fn write_matrix_file(path: &Path, labels: &[String], values: &DMatrix<f64>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_matrix(file, labels, values).map_err(|e| CliError::io(path, e))
}

/// Writes a 0/1 matrix, used for contamination masks.
pub fn write_mask_file(path: &Path, labels: &[String], mask: &DMatrix<bool>) -> Result<(), CliError> {
    write_matrix_file(path, labels, &mask.map(|b| if b { 1.0 } else { 0.0 }))
}
