//! Reading, writing, validating and merging run records.
//!
//! Two wire formats share one flat schema: json-lines (one object per line)
//! and CSV with a header row. Field names are fixed and case-sensitive; see
//! [`FIELDS`].

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::metrics::{CacheLevel, CacheLevelCounters, Discretization, RunRecord, VALID_LINE_SIZES};

/// Canonical field order, used for CSV headers and json-lines keys.
pub const FIELDS: [&str; 15] = [
    "label",
    "dofs",
    "wall_time_s",
    "flops",
    "workers",
    "linear_iterations",
    "nonlinear_iterations",
    "h_size",
    "l2_error",
    "alpha",
    "discretization",
    "l1_misses",
    "l2_misses",
    "l3_misses",
    "line_size_bytes",
];

/// Line size assumed when misses are given without one.
pub const DEFAULT_LINE_SIZE: u32 = 64;

const MISS_FIELDS: [(&str, CacheLevel); 3] =
    [("l1_misses", CacheLevel::L1), ("l2_misses", CacheLevel::L2), ("l3_misses", CacheLevel::L3)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    JsonLines,
    Csv,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::JsonLines => "json-lines",
            Format::Csv => "csv",
        }
    }

    /// Guess from a file extension: `.csv` is CSV, everything else json-lines.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::JsonLines,
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json-lines" | "jsonl" => Ok(Format::JsonLines),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format {other:?} (expected json-lines or csv)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// The first bad line fails the whole parse.
    #[default]
    Strict,
    /// Bad lines are skipped and reported as warnings.
    Lenient,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {reason}")]
    Line { line: u64, reason: String },
    #[error("input is not valid UTF-8")]
    NotUtf8,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("record {label:?} cannot be written: {reason}")]
    Unrepresentable { label: String, reason: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// A skipped line in lenient mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

/// Parsed records plus the format they came in.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordDocument {
    pub format: Format,
    pub records: Vec<RunRecord>,
    pub warnings: Vec<ParseWarning>,
}

/// One broken invariant of a [`RunRecord`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rule)
    }
}

fn line_size_rule() -> String {
    let sizes: Vec<String> = VALID_LINE_SIZES.iter().map(u32::to_string).collect();
    format!("line_size must be a power of two in {{{}}}", sizes.join(","))
}

/// Lists every invariant the record breaks. Empty means valid.
pub fn validate_record(record: &RunRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |field, rule: &str| out.push(Violation { field, rule: rule.to_string() });
    if record.dofs < 1 {
        push("dofs", "dofs must be ≥ 1");
    }
    if !(record.wall_time > 0.0 && record.wall_time.is_finite()) {
        push("wall_time_s", "wall_time must be > 0");
    }
    if record.workers < 1 {
        push("workers", "workers must be ≥ 1");
    }
    if let Some(h) = record.h_size {
        if !(h > 0.0 && h.is_finite()) {
            push("h_size", "h_size must be > 0");
        }
    }
    if let Some(e) = record.l2_error {
        if !(e >= 0.0 && e.is_finite()) {
            push("l2_error", "l2_error must be ≥ 0");
        }
    }
    if let Some(a) = record.alpha {
        if !(a >= 0.0 && a.is_finite()) {
            push("alpha", "alpha must be ≥ 0");
        }
    }
    for (i, c) in record.cache_counters.iter().enumerate() {
        if record.cache_counters[..i].iter().any(|p| p.level == c.level) {
            push("cache_counters", &format!("at most one counter per cache level ({} repeated)", c.level));
        }
        if !VALID_LINE_SIZES.contains(&c.line_size) {
            push("line_size_bytes", &line_size_rule());
        }
    }
    out
}

// ---- decoding ----

/// A field value before type conversion.
enum Raw<'a> {
    Text(&'a str),
    Json(&'a Value),
}

fn decode_count(field: &str, raw: &Raw, min: i128) -> Result<Option<u64>, String> {
    let value: i128 = match raw {
        Raw::Text(s) => {
            let s = s.trim();
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map_err(|_| format!("{field} must be an integer, got {s:?}"))?
        }
        Raw::Json(Value::Null) => return Ok(None),
        Raw::Json(v) => match (v.as_u64(), v.as_i64()) {
            (Some(u), _) => u as i128,
            (None, Some(i)) => i as i128,
            _ => return Err(format!("{field} must be an integer, got {v}")),
        },
    };
    if value < min {
        return Err(format!("{field} must be ≥ {min}"));
    }
    u64::try_from(value).map(Some).map_err(|_| format!("{field} is too large"))
}

fn decode_real(field: &str, raw: &Raw) -> Result<Option<f64>, String> {
    match raw {
        Raw::Text(s) => {
            let s = s.trim();
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>().map(Some).map_err(|_| format!("{field} must be a number, got {s:?}"))
        }
        Raw::Json(Value::Null) => Ok(None),
        Raw::Json(v) => v.as_f64().map(Some).ok_or_else(|| format!("{field} must be a number, got {v}")),
    }
}

fn decode_text(field: &str, raw: &Raw) -> Result<Option<String>, String> {
    match raw {
        Raw::Text(s) => Ok(Some(s.to_string())),
        Raw::Json(Value::Null) => Ok(None),
        Raw::Json(Value::String(s)) => Ok(Some(s.clone())),
        Raw::Json(v) => Err(format!("{field} must be a string, got {v}")),
    }
}

fn required<T>(v: Option<T>, field: &str) -> Result<T, String> {
    v.ok_or_else(|| format!("missing required field {field}"))
}

/// Builds a record from a field lookup. Unknown fields are never asked for.
fn decode_record<'a>(get: impl Fn(&str) -> Option<Raw<'a>>) -> Result<RunRecord, String> {
    let count = |f: &str, min| get(f).map_or(Ok(None), |r| decode_count(f, &r, min));
    let real = |f: &str| get(f).map_or(Ok(None), |r| decode_real(f, &r));
    let text = |f: &str| get(f).map_or(Ok(None), |r| decode_text(f, &r));

    // value rules are checked before presence so the most specific message wins
    let label = text("label")?;
    let dofs = count("dofs", 1)?;
    let wall_time = real("wall_time_s")?;
    if wall_time.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
        return Err("wall_time must be > 0".into());
    }
    let flops = count("flops", 0)?;
    let workers = count("workers", 1)?;
    let workers = workers.map(u32::try_from).transpose().map_err(|_| "workers is too large".to_string())?;

    let label = required(label, "label")?;
    let dofs = required(dofs, "dofs")?;
    let wall_time = required(wall_time, "wall_time_s")?;
    let flops = required(flops, "flops")?;
    let workers = required(workers, "workers")?;

    let mut record = RunRecord::new(label, dofs, wall_time, flops, workers);
    record.linear_iterations = count("linear_iterations", 0)?;
    record.nonlinear_iterations = count("nonlinear_iterations", 0)?;
    record.h_size = real("h_size")?;
    record.l2_error = real("l2_error")?;
    record.alpha = real("alpha")?;
    record.discretization = match text("discretization")? {
        None => None,
        Some(s) if s.trim().is_empty() => None,
        Some(s) => Some(s.trim().parse::<Discretization>()?),
    };

    let line_size = match count("line_size_bytes", 0)? {
        None => DEFAULT_LINE_SIZE,
        Some(l) => u32::try_from(l)
            .ok()
            .filter(|l| VALID_LINE_SIZES.contains(l))
            .ok_or_else(line_size_rule)?,
    };
    for (field, level) in MISS_FIELDS {
        if let Some(misses) = count(field, 0)? {
            record.cache_counters.push(CacheLevelCounters { level, misses, line_size });
        }
    }

    if let Some(v) = validate_record(&record).into_iter().next() {
        return Err(v.rule);
    }
    Ok(record)
}

fn decode_json_line(line: &str) -> Result<RunRecord, String> {
    let obj: Map<String, Value> = match serde_json::from_str::<Value>(line) {
        Ok(Value::Object(m)) => m,
        Ok(_) => return Err("expected a JSON object".into()),
        Err(e) => return Err(format!("invalid JSON: {e}")),
    };
    decode_record(|f| obj.get(f).map(Raw::Json))
}

/// Parses a whole stream.
///
/// Json-lines line numbers count every physical line; CSV line numbers are
/// those of the data row in the file (the header is line 1).
pub fn parse_records(input: impl Read, format: Format, mode: ParseMode) -> Result<RecordDocument, IngestError> {
    let mut bytes = Vec::new();
    let mut input = input;
    input.read_to_end(&mut bytes)?;
    let text = String::from_utf8(bytes).map_err(|_| IngestError::NotUtf8)?;
    parse_str(&text, format, mode)
}

pub fn parse_str(text: &str, format: Format, mode: ParseMode) -> Result<RecordDocument, IngestError> {
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut handle = |line: u64, result: Result<RunRecord, String>| -> Result<(), IngestError> {
        match (result, mode) {
            (Ok(r), _) => records.push(r),
            (Err(reason), ParseMode::Strict) => return Err(IngestError::Line { line, reason }),
            (Err(reason), ParseMode::Lenient) => warnings.push(ParseWarning { line, reason }),
        }
        Ok(())
    };

    match format {
        Format::JsonLines => {
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                handle(i as u64 + 1, decode_json_line(line))?;
            }
        }
        Format::Csv => {
            let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
            let headers = reader.headers()?.clone();
            let column = |name: &str| headers.iter().position(|h| h.trim() == name);
            let columns: Vec<(&str, Option<usize>)> = FIELDS.iter().map(|&f| (f, column(f))).collect();
            for row in reader.records() {
                let row = match row {
                    Ok(row) => row,
                    Err(e) => {
                        let line = e.position().map_or(0, |p| p.line());
                        handle(line, Err(e.to_string()))?;
                        continue;
                    }
                };
                let line = row.position().map_or(0, |p| p.line());
                let result = if row.len() != headers.len() {
                    Err(format!("expected {} fields, found {}", headers.len(), row.len()))
                } else {
                    decode_record(|f| {
                        let idx = columns.iter().find(|(name, _)| *name == f)?.1?;
                        row.get(idx).map(Raw::Text)
                    })
                };
                handle(line, result)?;
            }
        }
    }
    Ok(RecordDocument { format, records, warnings })
}

// ---- encoding ----

/// Wire values of one record, in [`FIELDS`] order; `None` is an absent field.
fn encode_fields(record: &RunRecord) -> Result<Vec<Option<Value>>, IngestError> {
    let bad = |reason: String| IngestError::Unrepresentable { label: record.label.clone(), reason };
    if let Some(v) = validate_record(record).into_iter().next() {
        return Err(bad(v.rule));
    }
    let line_size = match record.cache_counters.first() {
        None => None,
        Some(first) => {
            if record.cache_counters.iter().any(|c| c.line_size != first.line_size) {
                return Err(bad("cache levels with different line sizes".into()));
            }
            Some(first.line_size)
        }
    };
    let misses = |level| record.counters(level).map(|c| Value::from(c.misses));
    let real = |x: Option<f64>| x.map(Value::from);

    Ok(vec![
        Some(Value::from(record.label.clone())),
        Some(Value::from(record.dofs)),
        Some(Value::from(record.wall_time)),
        Some(Value::from(record.flops)),
        Some(Value::from(record.workers)),
        record.linear_iterations.map(Value::from),
        record.nonlinear_iterations.map(Value::from),
        real(record.h_size),
        real(record.l2_error),
        real(record.alpha),
        record.discretization.map(|d| Value::from(d.as_str())),
        misses(CacheLevel::L1),
        misses(CacheLevel::L2),
        misses(CacheLevel::L3),
        line_size.map(Value::from),
    ])
}

fn csv_cell(v: &Option<Value>) -> String {
    match v {
        None => String::new(),
        Some(Value::String(s)) => s.clone(),
        // f64 Display is the shortest string that parses back to the same
        // value and never uses exponent or grouping characters.
        Some(Value::Number(n)) => match (n.as_u64(), n.as_f64()) {
            (Some(u), _) => u.to_string(),
            (None, Some(f)) => f.to_string(),
            _ => n.to_string(),
        },
        Some(other) => other.to_string(),
    }
}

/// Writes records as json-lines or CSV (header always written).
pub fn write_records(out: impl Write, records: &[RunRecord], format: Format) -> Result<(), IngestError> {
    write_records_with(out, records, format, &[], |_, _| Vec::new())
}

/// Like [`write_records`], with extra trailing columns. `extra` gets the row
/// index and record and returns one value per name in `extra_names`; parsers
/// ignore these columns.
pub fn write_records_with(
    mut out: impl Write,
    records: &[RunRecord],
    format: Format,
    extra_names: &[&str],
    extra: impl Fn(usize, &RunRecord) -> Vec<Option<Value>>,
) -> Result<(), IngestError> {
    match format {
        Format::JsonLines => {
            for (i, r) in records.iter().enumerate() {
                let mut obj = Map::new();
                let names = FIELDS.iter().chain(extra_names);
                for (name, v) in names.zip(encode_fields(r)?.into_iter().chain(extra(i, r))) {
                    if let Some(v) = v {
                        obj.insert(name.to_string(), v);
                    }
                }
                serde_json::to_writer(&mut out, &Value::Object(obj)).map_err(std::io::Error::from)?;
                out.write_all(b"\n")?;
            }
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
            w.write_record(FIELDS.iter().chain(extra_names))?;
            for (i, r) in records.iter().enumerate() {
                let cells: Vec<String> = encode_fields(r)?.iter().chain(&extra(i, r)).map(csv_cell).collect();
                w.write_record(&cells)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn records_to_string(records: &[RunRecord], format: Format) -> Result<String, IngestError> {
    let mut buf = Vec::new();
    write_records(&mut buf, records, format)?;
    Ok(String::from_utf8(buf).expect("writers emit UTF-8"))
}

// ---- merging ----

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MergeError {
    #[error("nothing to merge")]
    Empty,
    #[error("record {label:?} is invalid: {reason}")]
    Invalid { label: String, reason: String },
    #[error("records disagree on {field}")]
    Mismatch { field: &'static str },
    #[error("{0} overflows when summed")]
    Overflow(&'static str),
}

fn same<T: PartialEq>(records: &[RunRecord], field: &'static str, get: impl Fn(&RunRecord) -> T) -> Result<(), MergeError> {
    let first = get(&records[0]);
    if records.iter().all(|r| get(r) == first) {
        Ok(())
    } else {
        Err(MergeError::Mismatch { field })
    }
}

/// Combines per-worker records of one solve into a single record.
///
/// Counters and FLOPs are summed, wall time is the slowest worker, and
/// `workers` becomes the number of inputs. The label is the smallest input
/// label and `l2_error` the largest reported, so the result does not depend
/// on input order.
pub fn merge_worker_records(records: &[RunRecord]) -> Result<RunRecord, MergeError> {
    if records.is_empty() {
        return Err(MergeError::Empty);
    }
    for r in records {
        if let Some(v) = validate_record(r).into_iter().next() {
            return Err(MergeError::Invalid { label: r.label.clone(), reason: v.rule });
        }
    }
    same(records, "dofs", |r| r.dofs)?;
    same(records, "discretization", |r| r.discretization)?;
    same(records, "h_size", |r| r.h_size.map(f64::to_bits))?;
    same(records, "alpha", |r| r.alpha.map(f64::to_bits))?;
    same(records, "linear_iterations", |r| r.linear_iterations)?;
    same(records, "nonlinear_iterations", |r| r.nonlinear_iterations)?;
    let levels = |r: &RunRecord| {
        let mut l: Vec<_> = r.cache_counters.iter().map(|c| (c.level, c.line_size)).collect();
        l.sort();
        l
    };
    same(records, "cache levels", levels)?;

    let workers = u32::try_from(records.len()).map_err(|_| MergeError::Overflow("workers"))?;
    let flops = records
        .iter()
        .try_fold(0u64, |acc, r| acc.checked_add(r.flops))
        .ok_or(MergeError::Overflow("flops"))?;
    let wall_time = records.iter().map(|r| r.wall_time).fold(f64::MIN, f64::max);
    let label = records.iter().map(|r| r.label.as_str()).min().unwrap_or_default();

    let first = &records[0];
    let mut merged = RunRecord::new(label, first.dofs, wall_time, flops, workers);
    merged.linear_iterations = first.linear_iterations;
    merged.nonlinear_iterations = first.nonlinear_iterations;
    merged.h_size = first.h_size;
    merged.alpha = first.alpha;
    merged.discretization = first.discretization;
    merged.l2_error = records.iter().filter_map(|r| r.l2_error).reduce(f64::max);

    let mut counters: Vec<CacheLevelCounters> = first.cache_counters.clone();
    counters.sort_by_key(|c| c.level);
    for c in &mut counters {
        c.misses = records
            .iter()
            .try_fold(0u64, |acc, r| acc.checked_add(r.counters(c.level).map_or(0, |x| x.misses)))
            .ok_or(MergeError::Overflow("misses"))?;
    }
    merged.cache_counters = counters;
    Ok(merged)
}
