use serde_json::Value;

use super::{ReportError, SpectrumReport};
use crate::ingest::{write_records_with, Format};
use crate::metrics::{CacheLevel, SpectrumPoint};

/// Derived columns appended after the canonical record columns in CSV output.
pub const TABLE_EXTRA_COLUMNS: [&str; 6] =
    ["ai_per_miss_l1", "ai_per_miss_l2", "ai_per_miss_l3", "rate1", "rate2", "rate3"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    /// Canonical record columns plus derived metrics; parseable by ingest.
    Csv,
    /// Aligned plain text for terminals.
    Text,
}

fn ai(p: &SpectrumPoint, level: CacheLevel) -> Option<f64> {
    p.level(level).and_then(|l| l.ai_per_miss)
}

/// One row per point, in series order.
pub fn render_table(report: &SpectrumReport, format: TableFormat) -> Result<String, ReportError> {
    match format {
        TableFormat::Csv => csv(report),
        TableFormat::Text => Ok(text(report)),
    }
}

fn csv(report: &SpectrumReport) -> Result<String, ReportError> {
    let points: Vec<&SpectrumPoint> = report.points().collect();
    let records: Vec<_> = points.iter().map(|p| p.record.clone()).collect();
    let mut buf = Vec::new();
    write_records_with(&mut buf, &records, Format::Csv, &TABLE_EXTRA_COLUMNS, |i, _| {
        let p = points[i];
        vec![
            ai(p, CacheLevel::L1).map(Value::from),
            ai(p, CacheLevel::L2).map(Value::from),
            ai(p, CacheLevel::L3).map(Value::from),
            Some(Value::from(p.rate1)),
            p.rate2.map(Value::from),
            Some(Value::from(p.rate3)),
        ]
    })?;
    Ok(String::from_utf8(buf).expect("writer emits UTF-8"))
}

fn text(report: &SpectrumReport) -> String {
    let header = ["label", "dofs", "time_s", "flops", "iters", "ai_l1", "ai_l2", "ai_l3", "rate1", "rate2", "rate3"];
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
    let rows: Vec<Vec<String>> = report
        .points()
        .map(|p| {
            vec![
                p.record.label.clone(),
                p.dofs().to_string(),
                p.wall_time().to_string(),
                p.record.flops.to_string(),
                p.record.linear_iterations.map_or("-".into(), |k| k.to_string()),
                opt(ai(p, CacheLevel::L1)),
                opt(ai(p, CacheLevel::L2)),
                opt(ai(p, CacheLevel::L3)),
                format!("{:.2}", p.rate1),
                opt(p.rate2),
                format!("{:.2}", p.rate3),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<String>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = line(header.iter().map(|s| s.to_string()).collect());
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_str, ParseMode};
    use crate::metrics::RunRecord;
    use crate::report::{build_spectrum_report, GroupBy};

    fn report() -> SpectrumReport {
        let mut a = RunRecord::new("cg1", 729, 0.125, 50_000, 1);
        a.linear_iterations = Some(10);
        let b = RunRecord::new("cg1, wide", 35_937, 2.5, 9_000_000, 2);
        build_spectrum_report(&[a, b], GroupBy::Label).unwrap()
    }

    #[test]
    fn csv_header_and_rows() {
        let rep = build_spectrum_report(&[RunRecord::new("a", 10, 1.0, 5, 1)], GroupBy::Label).unwrap();
        let out = render_table(&rep, TableFormat::Csv).unwrap();
        assert_eq!(out.lines().count(), 2);
        assert!(out.lines().next().unwrap().ends_with("ai_per_miss_l1,ai_per_miss_l2,ai_per_miss_l3,rate1,rate2,rate3"));
    }

    #[test]
    fn csv_reparses() {
        let rep = report();
        let out = render_table(&rep, TableFormat::Csv).unwrap();
        let back = parse_str(&out, Format::Csv, ParseMode::Strict).unwrap().records;
        let orig: Vec<_> = rep.points().map(|p| p.record.clone()).collect();
        assert_eq!(back, orig);
    }

    #[test]
    fn text_is_aligned() {
        let out = render_table(&report(), TableFormat::Text).unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].contains("5832.00"), "{out}");
        assert!(lines[1].contains("583.20"));
        // right-aligned numeric columns end at the same offset
        let end = |l: &str, pat: &str| l.find(pat).map(|i| i + pat.len());
        assert_eq!(end(lines[0], "dofs"), end(lines[1], "729"));
        assert_eq!(end(lines[0], "dofs"), end(lines[2], "35937"));
    }
}
