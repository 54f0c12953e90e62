//! Deterministic CSV and JSON writers.

use serde_json::Value;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

/// 17 significant digits, so every value round-trips.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Shortest form, for file names.
pub fn fmt_tag(x: f64) -> String {
    format!("{x}")
}

pub enum Cell {
    Int(i64),
    Float(f64),
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns);
        for (i, c) in cells.into_iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::Int(v) => write!(self.text, "{v}").unwrap(),
                Cell::Float(v) => self.text.push_str(&fmt_float(v)),
            }
        }
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> io::Result<PathBuf> {
        std::fs::write(path, &self.text)?;
        Ok(path.to_path_buf())
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn write_json(path: &Path, value: &Value) -> io::Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(path.to_path_buf())
}

/// `NaN`/`inf` become `null`.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}
