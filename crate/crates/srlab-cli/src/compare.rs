//! Column-by-column comparison of result tables for regression checks.

use std::path::Path;

use crate::table::{Cell, Table};

/// Worst relative deviation seen in one column.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnReport {
    pub column: String,
    pub max_rel_dev: f64,
}

/// Tables disagree in shape rather than content.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaMismatch(pub String);

impl std::fmt::Display for SchemaMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "schema mismatch: {}", self.0)
    }
}

fn cell_deviation(a: &Cell, b: &Cell) -> f64 {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => {
            if x == y {
                0.0
            } else {
                (x - y).abs() / x.abs().max(y.abs())
            }
        }
        _ => {
            if a == b {
                0.0
            } else {
                f64::INFINITY
            }
        }
    }
}

/// Per-column maximum relative deviation between two tables of equal shape.
pub fn compare_tables(a: &Table, b: &Table) -> Result<Vec<ColumnReport>, SchemaMismatch> {
    if a.columns != b.columns {
        return Err(SchemaMismatch(format!(
            "columns {:?} vs {:?}",
            a.columns, b.columns
        )));
    }
    if a.rows.len() != b.rows.len() {
        return Err(SchemaMismatch(format!(
            "{} rows vs {} rows",
            a.rows.len(),
            b.rows.len()
        )));
    }
    let mut reports: Vec<ColumnReport> = a
        .columns
        .iter()
        .map(|c| ColumnReport { column: c.clone(), max_rel_dev: 0.0 })
        .collect();
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        for (j, (ca, cb)) in ra.iter().zip(rb).enumerate() {
            let dev = cell_deviation(ca, cb);
            if dev > reports[j].max_rel_dev {
                reports[j].max_rel_dev = dev;
            }
        }
    }
    Ok(reports)
}

/// Loads, compares, and reports two CSV files. Exit code 0 when every column
/// stays within `tolerance`, 1 when a column exceeds it, 2 on I/O or schema
/// problems.
pub fn run_compare(a: &Path, b: &Path, tolerance: f64) -> u8 {
    let load = |path: &Path| -> Result<Table, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("reading {}: {e}", path.display()))?;
        Table::parse_csv(&text).map_err(|e| format!("parsing {}: {e}", path.display()))
    };
    let (ta, tb) = match (load(a), load(b)) {
        (Ok(ta), Ok(tb)) => (ta, tb),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let reports = match compare_tables(&ta, &tb) {
        Ok(reports) => reports,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let mut worst: Option<&ColumnReport> = None;
    for report in &reports {
        println!("column {}: max relative deviation {:e}", report.column, report.max_rel_dev);
        if worst.is_none_or(|w| report.max_rel_dev > w.max_rel_dev) {
            worst = Some(report);
        }
    }
    match worst {
        Some(w) if w.max_rel_dev > tolerance => {
            println!("FAIL: column {} deviates by {:e} (tolerance {tolerance:e})", w.column, w.max_rel_dev);
            1
        }
        _ => {
            println!("PASS: all columns within tolerance {tolerance:e}");
            0
        }
    }
}
