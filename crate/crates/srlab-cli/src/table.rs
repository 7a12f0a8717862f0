//! Column-oriented result tables with CSV and JSON serialization and a CSV
//! parser for regression comparison.

use anyhow::{bail, Context, Result};

/// One table cell. Integers and floats format through the standard `Display`
/// implementations, which are deterministic, so a given table always
/// serializes to the same bytes.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{v}"),
            Cell::Text(v) => f.write_str(v),
        }
    }
}

impl Cell {
    /// Numeric view of the cell, when it has one.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Float(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::Int(v.into())
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// A header plus rows of equal width.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let entries = self.columns.iter().zip(row).map(|(c, cell)| {
                    let value = match cell {
                        Cell::Int(v) => serde_json::json!(v),
                        Cell::Float(v) => serde_json::json!(v),
                        Cell::Text(v) => serde_json::json!(v),
                    };
                    (c.clone(), value)
                });
                serde_json::Value::Object(entries.collect())
            })
            .collect();
        let mut out = serde_json::to_string_pretty(&rows).expect("tables serialize");
        out.push('\n');
        out
    }

    /// Parses CSV written by [`Table::to_csv`]. Cells that read back as
    /// integers or floats become numeric; everything else stays text.
    pub fn parse_csv(text: &str) -> Result<Table> {
        let mut lines = text.lines();
        let header = lines.next().context("empty table")?;
        let columns: Vec<String> = header.split(',').map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let cells: Vec<Cell> = line.split(',').map(parse_cell).collect();
            if cells.len() != columns.len() {
                bail!("row {} has {} cells, header has {}", i + 1, cells.len(), columns.len());
            }
            rows.push(cells);
        }
        Ok(Table { columns, rows })
    }
}

fn parse_cell(text: &str) -> Cell {
    if let Ok(v) = text.parse::<i64>() {
        return Cell::Int(v);
    }
    if let Ok(v) = text.parse::<f64>() {
        return Cell::Float(v);
    }
    Cell::Text(text.to_string())
}
