//! CSV tables in `%.12e` format and JSON sidecars.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use ars2lab::Error;
use serde_json::Value;

/// Formats like C's `%.12e`: two-digit signed exponent.
pub fn fmt_e(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => fmt_e(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the table to `out` (or stdout) and, with a path, the sidecar
/// `<out>.json` holding the configuration and summary.
pub fn emit(table: &Table, out: Option<&Path>, sidecar: &Value) -> Result<(), Error> {
    let bytes = table.to_csv()?;
    let io = |e: io::Error| Error::Io(e.to_string());
    match out {
        Some(path) => {
            fs::write(path, &bytes).map_err(io)?;
            let text = serde_json::to_string_pretty(sidecar).map_err(|e| Error::Io(e.to_string()))?;
            fs::write(sidecar_path(path), text + "\n").map_err(io)?;
        }
        None => io::stdout().write_all(&bytes).map_err(io)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_style_exponents() {
        assert_eq!(fmt_e(12.566370614359172), "1.256637061436e+01");
        assert_eq!(fmt_e(-0.00123), "-1.230000000000e-03");
        assert_eq!(fmt_e(0.0), "0.000000000000e+00");
        assert_eq!(fmt_e(1e150), "1.000000000000e+150");
        assert_eq!(fmt_e(f64::NAN), "nan");
    }
}
