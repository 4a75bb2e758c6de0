//! CSV ingestion and atomic output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use pla_core::Matrix64;

use crate::error::{CliError, CliResult};

/// A numeric table with named columns.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub names: Vec<String>,
    pub data: Matrix64,
}

impl Dataset {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Reads a headed, comma-separated table of finite numbers.
pub fn read_csv(path: &Path) -> CliResult<Dataset> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_csv(&bytes)
}

pub fn parse_csv(bytes: &[u8]) -> CliResult<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let names: Vec<String> = reader
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_owned)
        .collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(CliError::Input("missing header row".into()));
    }
    if let Some(j) = names.iter().position(String::is_empty) {
        return Err(CliError::Input(format!("empty name for column {}", j + 1)));
    }
    for (j, name) in names.iter().enumerate() {
        if names[..j].contains(name) {
            return Err(CliError::Input(format!("duplicate column name '{name}'")));
        }
    }

    let mut values = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Input(format!(
                    "line {line}, column '{}': cannot parse '{field}' as a number",
                    names[j]
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Input(format!(
                    "line {line}, column '{}': non-finite value '{field}'",
                    names[j]
                )));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::Input("no data rows".into()));
    }
    let data = Matrix64::new(rows, names.len(), values)?;
    Ok(Dataset { names, data })
}

fn csv_error(e: csv::Error) -> CliError {
    let line = e.position().map(|p| p.line());
    let msg = match e.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("expected {expected_len} fields, found {len}"),
        _ => e.to_string(),
    };
    match line {
        Some(line) => CliError::Input(format!("malformed CSV at line {line}: {msg}")),
        None => CliError::Input(format!("malformed CSV: {msg}")),
    }
}

/// Shortest decimal form that reads back to the same value, in exponent
/// notation outside `[1e-5, 1e16)`.
pub fn fmt_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-5..1e16).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// Renders a table with a header row.
pub fn write_csv(names: &[String], data: &Matrix64) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(names).map_err(output_error)?;
    for i in 0..data.rows() {
        w.write_record(data.row(i).iter().map(|&v| fmt_float(v)))
            .map_err(output_error)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Input(format!("cannot render CSV: {e}")))
}

pub fn output_error(e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("cannot write output: {e}"))
}

/// Writes every `(path, bytes)` pair through a temporary file in the target
/// directory. If any write fails, files already placed by this call are
/// removed.
pub fn write_files_atomic(files: &[(PathBuf, Vec<u8>)]) -> CliResult<()> {
    let mut placed: Vec<&Path> = Vec::new();
    for (path, bytes) in files {
        if let Err(e) = write_atomic(path, bytes) {
            for p in placed {
                let _ = fs::remove_file(p);
            }
            return Err(e);
        }
        placed.push(path);
    }
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| output_error(format!("{}: {e}", path.display())))?;
    tmp.write_all(bytes).map_err(output_error)?;
    tmp.flush().map_err(output_error)?;
    tmp.persist(path)
        .map_err(|e| output_error(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}
