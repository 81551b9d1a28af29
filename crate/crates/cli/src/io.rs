//! CSV and JSON plumbing: RFC-4180-subset CSV (comma-separated floats,
//! optional single header row), lossless float printing, atomic writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use robustkc::types::{DataMatrix, Label};

/// Parse failure with location, surfaced as exit code 2.
#[derive(Debug)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

/// Read a numeric CSV into rows. A single leading header row is tolerated
/// (detected by non-numeric cells) and skipped.
pub fn read_csv(path: &Path) -> Result<Vec<Vec<f64>>, ParseError> {
    let content = fs::read_to_string(path).map_err(|e| ParseError {
        line: 0,
        column: 0,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_csv(&content)
}

pub fn parse_csv(content: &str) -> Result<Vec<Vec<f64>>, ParseError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (lineno, line) in content.lines().enumerate() {
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        let mut failed_at = None;
        for (col, cell) in trimmed.split(',').enumerate() {
            match cell.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                Ok(_) => {
                    failed_at = Some((col, "non-finite value".to_string()));
                    break;
                }
                Err(_) => {
                    failed_at = Some((col, format!("not a number: `{}`", cell.trim())));
                    break;
                }
            }
        }
        if let Some((col, message)) = failed_at {
            // a non-numeric first line is a header
            if lineno == 0 && rows.is_empty() {
                continue;
            }
            return Err(ParseError { line: lineno + 1, column: col + 1, message });
        }
        if let Some(w) = width {
            if row.len() != w {
                return Err(ParseError {
                    line: lineno + 1,
                    column: 1,
                    message: format!("expected {w} columns, found {}", row.len()),
                });
            }
        } else {
            width = Some(row.len());
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(ParseError { line: 1, column: 1, message: "no data rows".into() });
    }
    Ok(rows)
}

pub fn data_matrix_from_rows(rows: Vec<Vec<f64>>) -> Result<DataMatrix<f64>, ParseError> {
    DataMatrix::from_rows(rows)
        .map_err(|e| ParseError { line: 0, column: 0, message: e.to_string() })
}

/// 17 significant digits: enough for f64 values to round-trip exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write rows as CSV with lossless floats, atomically (temp file + rename).
pub fn write_csv(path: &Path, header: Option<&str>, rows: &[Vec<f64>]) -> std::io::Result<()> {
    let mut buf = String::new();
    if let Some(h) = header {
        buf.push_str(h);
        buf.push('\n');
    }
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
        buf.push_str(&cells.join(","));
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes())
}

/// Truth labels as integers: cluster ids 1..r, 0 for outliers, -1 unlabeled.
pub fn label_to_int(label: Label) -> i64 {
    match label {
        Label::Cluster(k) => k as i64,
        Label::Outlier => 0,
        Label::Unlabeled => -1,
    }
}

pub fn int_to_label(v: i64) -> Label {
    match v {
        0 => Label::Outlier,
        x if x > 0 => Label::Cluster(x as usize),
        _ => Label::Unlabeled,
    }
}

pub fn write_labels_csv(path: &Path, labels: &[Label]) -> std::io::Result<()> {
    let mut buf = String::from("label\n");
    for &l in labels {
        buf.push_str(&label_to_int(l).to_string());
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes())
}

pub fn read_labels_csv(path: &Path) -> Result<Vec<Label>, ParseError> {
    let rows = read_csv(path)?;
    Ok(rows.into_iter().map(|r| int_to_label(r[0] as i64)).collect())
}

/// Write via a sibling temp file and rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}
