//! Column tables and their CSV form.

use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
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

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
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

/// Twelve significant digits in scientific notation; `NaN` for missing values.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.11e}")
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.headers.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    /// Numeric values of one column (`NaN` for non-numeric cells).
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.column_index(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[idx] {
                    Cell::Num(v) => *v,
                    Cell::Int(v) => *v as f64,
                    Cell::Text(_) => f64::NAN,
                })
                .collect(),
        )
    }

    /// A table with only the named columns, in the given order.
    pub fn select(&self, names: &[&str]) -> Option<Table> {
        let idx: Option<Vec<usize>> = names.iter().map(|n| self.column_index(n)).collect();
        let idx = idx?;
        Some(Table {
            headers: names.iter().map(|s| s.to_string()).collect(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&i| r[i].clone()).collect()).collect(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let head: Vec<String> = self.headers.iter().map(|h| quote(h)).collect();
        out.push_str(&head.join(","));
        out.push('\n');
        for row in &self.rows {
            for (k, cell) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                match cell {
                    Cell::Num(v) => out.push_str(&format_number(*v)),
                    Cell::Int(v) => {
                        let _ = write!(out, "{v}");
                    }
                    Cell::Text(s) => out.push_str(&quote(s)),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}
