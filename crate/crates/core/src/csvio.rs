//! Shared CSV plumbing for the trace, curve, risk and sample-log formats.
//!
//! All formats are comma separated with a header row; lines starting with `#` are
//! comments. Errors carry the 1-based line number of the offending row.

use std::io::Read;

use crate::traces::TraceError;

pub(crate) struct Row {
    pub line: usize,
    pub fields: Vec<String>,
}

pub(crate) struct Table {
    pub header_line: usize,
    pub header: Vec<String>,
    pub rows: Vec<Row>,
}

fn csv_error(err: csv::Error, lines: &[usize]) -> TraceError {
    let line = err.position().map_or(0, |p| physical_line(lines, p.line()));
    let message = match err.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        _ => err.to_string(),
    };
    TraceError::Parse { line, message }
}

fn physical_line(lines: &[usize], line: u64) -> usize {
    let idx = (line as usize).saturating_sub(1);
    lines.get(idx).copied().unwrap_or(idx + 1)
}

/// Drops comment and blank lines, returning the remaining text and the 1-based
/// physical line number of each kept line.
fn strip_comments<R: Read>(mut reader: R) -> Result<(String, Vec<usize>), TraceError> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| TraceError::Parse { line: 0, message: format!("read failed: {e}") })?;
    let mut kept = String::with_capacity(text.len());
    let mut lines = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let trimmed = l.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        kept.push_str(l);
        kept.push('\n');
        lines.push(i + 1);
    }
    Ok((kept, lines))
}

pub(crate) fn read_table<R: Read>(reader: R) -> Result<Table, TraceError> {
    let (text, lines) = strip_comments(reader)?;
    if lines.is_empty() {
        return Err(TraceError::Parse { line: 1, message: "missing header row".into() });
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(e, &lines))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(e, &lines))?;
        let line = record.position().map_or(0, |p| physical_line(&lines, p.line()));
        rows.push(Row { line, fields: record.iter().map(str::to_owned).collect() });
    }
    Ok(Table { header_line: lines[0], header, rows })
}

impl Table {
    pub fn column(&self, name: &str) -> Result<usize, TraceError> {
        self.header.iter().position(|h| h == name).ok_or_else(|| TraceError::Parse {
            line: self.header_line,
            message: format!("missing column `{name}` (header: {})", self.header.join(",")),
        })
    }

    pub fn optional_column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Fails unless the header is exactly the listed columns, in any order.
    pub fn expect_columns(&self, names: &[&str]) -> Result<Vec<usize>, TraceError> {
        if self.header.len() != names.len() {
            return Err(TraceError::Parse {
                line: self.header_line,
                message: format!("expected header `{}`, found `{}`", names.join(","), self.header.join(",")),
            });
        }
        names.iter().map(|n| self.column(n)).collect()
    }
}

impl Row {
    pub fn number(&self, idx: usize, name: &str) -> Result<f64, TraceError> {
        let raw = self.fields.get(idx).map(String::as_str).unwrap_or("");
        let value: f64 = raw.parse().map_err(|_| TraceError::Parse {
            line: self.line,
            message: format!("column `{name}`: `{raw}` is not a number"),
        })?;
        if !value.is_finite() {
            return Err(TraceError::Parse {
                line: self.line,
                message: format!("column `{name}`: `{raw}` is not finite"),
            });
        }
        Ok(value)
    }

    pub fn text(&self, idx: usize) -> &str {
        self.fields.get(idx).map(String::as_str).unwrap_or("")
    }
}

/// Converts rows of `time, v1, v2, ...` into per-column sample lists, checking that
/// times strictly increase and values are non-negative. The final row marks the
/// horizon end; its values are not held.
pub(crate) fn sampled_columns(
    rows: &[&Row],
    time_idx: usize,
    value_cols: &[(usize, &str)],
) -> Result<(Vec<Vec<(f64, f64)>>, f64), TraceError> {
    if rows.len() < 2 {
        let line = rows.first().map_or(1, |r| r.line);
        return Err(TraceError::Parse {
            line,
            message: "need at least two rows (the last row marks the horizon end)".into(),
        });
    }
    let mut columns = vec![Vec::with_capacity(rows.len()); value_cols.len()];
    let mut prev_time: Option<f64> = None;
    for row in rows {
        let time = row.number(time_idx, "time")?;
        if let Some(p) = prev_time {
            if time <= p {
                let kind = if time == p { "duplicate" } else { "unsorted" };
                return Err(TraceError::Parse { line: row.line, message: format!("{kind} timestamp {time}") });
            }
        }
        prev_time = Some(time);
        for (col, &(idx, name)) in columns.iter_mut().zip(value_cols) {
            let v = row.number(idx, name)?;
            if v < 0.0 {
                return Err(TraceError::Parse {
                    line: row.line,
                    message: format!("column `{name}`: negative value {v}"),
                });
            }
            col.push((time, v));
        }
    }
    let horizon = prev_time.expect("at least two rows");
    for col in &mut columns {
        col.pop();
    }
    Ok((columns, horizon))
}
