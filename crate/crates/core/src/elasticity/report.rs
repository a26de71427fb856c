//! Plain-text metric tables in the usual column layout.

use std::fmt::Write as _;

use super::ElasticityMetrics;

const COLUMNS: [&str; 5] = ["acc_O [#res.]", "acc_U [#res.]", "ts_O [%]", "ts_U [%]", "jitter [#adap./min]"];

fn cells(m: &ElasticityMetrics) -> [String; 5] {
    [
        format!("{:.3}", m.accuracy_o),
        format!("{:.3}", m.accuracy_u),
        format!("{:.1}", m.timeshare_o * 100.0),
        format!("{:.1}", m.timeshare_u * 100.0),
        format!("{:.3}", m.jitter),
    ]
}

/// Renders one row per `(label, metrics)` under a fixed header.
pub fn render_table(rows: &[(&str, ElasticityMetrics)]) -> String {
    let label_width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max("platform".len());
    let body: Vec<[String; 5]> = rows.iter().map(|(_, m)| cells(m)).collect();
    let widths: Vec<usize> = (0..COLUMNS.len())
        .map(|i| body.iter().map(|r| r[i].len()).chain([COLUMNS[i].len()]).max().unwrap_or(0))
        .collect();

    let mut out = String::new();
    let _ = write!(out, "{:<label_width$}", "platform");
    for (c, w) in COLUMNS.iter().zip(&widths) {
        let _ = write!(out, "  {c:>w$}");
    }
    out.push('\n');
    for ((label, _), row) in rows.iter().zip(&body) {
        let _ = write!(out, "{label:<label_width$}");
        for (c, w) in row.iter().zip(&widths) {
            let _ = write!(out, "  {c:>w$}");
        }
        out.push('\n');
    }
    out
}
