//! Column-labelled result tables with deterministic CSV and JSON
//! rendering.

use std::fmt::Write as _;

/// One table cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

/// Result table; the name is the output file stem.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: Vec<&'static str>) -> Self {
        Table {
            name,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    /// Renders CSV with '.' decimals, '\n' line endings, and 17
    /// significant digits on floats so values round-trip exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match cell {
                    Cell::Float(v) => {
                        let _ = write!(out, "{v:.16e}");
                    }
                    Cell::Int(v) => {
                        let _ = write!(out, "{v}");
                    }
                    Cell::Bool(v) => {
                        let _ = write!(out, "{v}");
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    /// Renders the same rows as a JSON array of column-keyed objects;
    /// non-finite floats become null.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = serde_json::Map::new();
                for (label, cell) in self.columns.iter().zip(row) {
                    obj.insert(label.to_string(), cell.to_json());
                }
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }
}

impl Cell {
    fn to_json(self) -> serde_json::Value {
        match self {
            Cell::Float(v) => float_json(v),
            Cell::Int(v) => serde_json::Value::from(v),
            Cell::Bool(v) => serde_json::Value::from(v),
        }
    }
}

/// JSON number, or null for NaN and infinities.
pub fn float_json(v: f64) -> serde_json::Value {
    serde_json::Number::from_f64(v)
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}
