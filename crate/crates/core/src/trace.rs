//! The simulation trace: a totally ordered log of every delivered event,
//! serialized as TSV. Identical runs produce byte-identical traces.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::NodeId;
use crate::time::SimTime;

pub const TRACE_HEADER: &str = "time\tkind\tsrc\tdst\tdetail";

/// One delivered event. `detail` is a stable space-separated `key=value`
/// rendering of the event's fields; values containing spaces are quoted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub at: SimTime,
    pub kind: String,
    pub src: NodeId,
    pub dst: NodeId,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn push(&mut self, record: TraceRecord) {
        debug_assert!(
            self.records.last().is_none_or(|r| r.at <= record.at),
            "trace timestamps must be non-decreasing"
        );
        debug_assert!(
            !record.detail.contains('\t') && !record.detail.contains('\n'),
            "trace detail must not contain tabs or newlines"
        );
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records of one kind, in order.
    pub fn of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a TraceRecord> {
        self.records.iter().filter(move |r| r.kind == kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceParseError {
    #[error("line {line}: expected five tab-separated columns")]
    BadColumnCount { line: usize },
    #[error("line {line}: bad timestamp {text:?}")]
    BadTimestamp { line: usize, text: String },
    #[error("missing header line")]
    MissingHeader,
}

/// Serializes a trace: header line, then one TSV line per record with the
/// time in fixed six-decimal seconds.
pub fn write_trace(trace: &Trace) -> String {
    let mut out = String::with_capacity(32 + trace.records.len() * 64);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.at, r.kind, r.src, r.dst, r.detail
        )
        .expect("write to string cannot fail");
    }
    out
}

/// Parses a trace previously produced by [`write_trace`].
pub fn parse_trace(text: &str) -> Result<Trace, TraceParseError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == TRACE_HEADER => {}
        _ => return Err(TraceParseError::MissingHeader),
    }
    let mut trace = Trace::default();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let cols: Vec<&str> = line.splitn(5, '\t').collect();
        if cols.len() != 5 {
            return Err(TraceParseError::BadColumnCount { line: line_no });
        }
        let at = parse_timestamp(cols[0]).ok_or_else(|| TraceParseError::BadTimestamp {
            line: line_no,
            text: cols[0].to_string(),
        })?;
        trace.records.push(TraceRecord {
            at,
            kind: cols[1].to_string(),
            src: NodeId::new(cols[2]),
            dst: NodeId::new(cols[3]),
            detail: cols[4].to_string(),
        });
    }
    Ok(trace)
}

/// Exact microsecond parse of the fixed `<secs>.<6 digits>` form.
pub fn parse_timestamp(text: &str) -> Option<SimTime> {
    let (secs, fraction) = text.split_once('.')?;
    if fraction.len() != 6 {
        return None;
    }
    let secs: u64 = secs.parse().ok()?;
    let micros: u64 = fraction.parse().ok()?;
    Some(SimTime::from_micros(secs * 1_000_000 + micros))
}

/// Splits a detail column into its `key=value` fields. A value opening with
/// `"` runs to the closing quote and may contain spaces.
pub fn parse_detail(detail: &str) -> std::collections::BTreeMap<String, String> {
    let mut fields = std::collections::BTreeMap::new();
    let mut rest = detail;
    loop {
        rest = rest.trim_start_matches(' ');
        if rest.is_empty() {
            break;
        }
        let Some(eq) = rest.find('=') else { break };
        let key = &rest[..eq];
        let after = &rest[eq + 1..];
        let (value, remainder) = if let Some(quoted) = after.strip_prefix('"') {
            match quoted.find('"') {
                Some(end) => (&quoted[..end], &quoted[end + 1..]),
                None => (quoted, ""),
            }
        } else {
            match after.find(' ') {
                Some(end) => (&after[..end], &after[end..]),
                None => (after, ""),
            }
        };
        fields.insert(key.to_string(), value.to_string());
        rest = remainder;
    }
    fields
}
