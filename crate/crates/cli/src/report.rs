//! Deterministic CSV and JSON output.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Formats a float for CSV: shortest round-trip decimal in `[1e-4, 1e15)`,
/// shortest round-trip scientific otherwise.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Coordinates joined by `;`.
pub fn point(x: &[f64]) -> String {
    x.iter().map(|v| num(*v)).collect::<Vec<_>>().join(";")
}

pub struct Table {
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &'static [&'static str]) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width differs from header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let internal = |e: csv::Error| CliError::Internal(e.to_string());
        w.write_record(self.header).map_err(internal)?;
        for row in &self.rows {
            w.write_record(row).map_err(internal)?;
        }
        w.into_inner().map_err(|e| CliError::Internal(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_bytes(path, &self.to_bytes()?)
    }
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn flag(ok: bool) -> String {
    if ok { "true".into() } else { "false".into() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(2.5e-7), "2.5e-7");
        assert_eq!(num(1.5e20), "1.5e20");
        assert_eq!(num(123456.0), "123456");
        assert_eq!(num(f64::NAN), "nan");
        for v in [0.1, 1.0 / 3.0, 2.5e-7, 6.02e23, -1e-300] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), point(&[0.5, -1.0])]);
        assert_eq!(String::from_utf8(t.to_bytes().unwrap()).unwrap(), "a,b\n1,0.5;-1\n");
    }
}
