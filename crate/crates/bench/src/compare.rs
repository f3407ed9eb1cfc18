//! Numeric diff of two output directories.

use std::fs;
use std::path::Path;

use crate::BenchError;

#[derive(Debug, Clone, PartialEq)]
pub enum Difference {
    MissingFile(String),
    Header { file: String },
    Shape { file: String },
    Value { file: String, line: usize, column: String, left: String, right: String },
}

impl std::fmt::Display for Difference {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Difference::MissingFile(name) => write!(f, "{name}: present in only one directory"),
            Difference::Header { file } => write!(f, "{file}: headers differ"),
            Difference::Shape { file } => write!(f, "{file}: row or column counts differ"),
            Difference::Value { file, line, column, left, right } => {
                write!(f, "{file}:{line}: {column}: {left} vs {right}")
            }
        }
    }
}

fn csv_names(dir: &Path) -> Result<Vec<String>, BenchError> {
    let entries = fs::read_dir(dir).map_err(|e| BenchError::Io(format!("{}: {e}", dir.display())))?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| BenchError::Io(e.to_string()))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".csv") {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

fn cells_match(a: &str, b: &str, tol: f64) -> bool {
    if a == b {
        return true;
    }
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())),
        _ => false,
    }
}

/// Compare two CSV texts cell by cell.
pub fn compare_csv(file: &str, left: &str, right: &str, tol: f64) -> Vec<Difference> {
    let l: Vec<&str> = left.lines().collect();
    let r: Vec<&str> = right.lines().collect();
    if l.first() != r.first() {
        return vec![Difference::Header { file: file.to_string() }];
    }
    if l.len() != r.len() {
        return vec![Difference::Shape { file: file.to_string() }];
    }
    let header: Vec<&str> = l.first().map(|h| h.split(',').collect()).unwrap_or_default();
    let mut diffs = Vec::new();
    for (i, (a, b)) in l.iter().zip(&r).enumerate().skip(1) {
        let ca: Vec<&str> = a.split(',').collect();
        let cb: Vec<&str> = b.split(',').collect();
        if ca.len() != cb.len() {
            diffs.push(Difference::Shape { file: file.to_string() });
            continue;
        }
        for (j, (x, y)) in ca.iter().zip(&cb).enumerate() {
            if !cells_match(x, y, tol) {
                diffs.push(Difference::Value {
                    file: file.to_string(),
                    line: i + 1,
                    column: header.get(j).unwrap_or(&"?").to_string(),
                    left: x.to_string(),
                    right: y.to_string(),
                });
            }
        }
    }
    diffs
}

/// Compare every CSV in two directories. Relative tolerance `tol` is
/// applied to numeric cells; other cells must match exactly.
pub fn compare_dirs(a: &Path, b: &Path, tol: f64) -> Result<Vec<Difference>, BenchError> {
    let na = csv_names(a)?;
    let nb = csv_names(b)?;
    let mut diffs = Vec::new();
    for name in na.iter().filter(|n| !nb.contains(n)).chain(nb.iter().filter(|n| !na.contains(n))) {
        diffs.push(Difference::MissingFile(name.clone()));
    }
    for name in na.iter().filter(|n| nb.contains(n)) {
        let read = |dir: &Path| {
            fs::read_to_string(dir.join(name)).map_err(|e| BenchError::Io(format!("{}: {e}", dir.join(name).display())))
        };
        diffs.extend(compare_csv(name, &read(a)?, &read(b)?, tol));
    }
    Ok(diffs)
}
