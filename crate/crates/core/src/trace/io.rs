//! Line-delimited trace files.
//!
//! Line 1 is the header `{"trace_id":…,"created":…,"scope_key_attr":…}`;
//! every further line is one event in its canonical form followed by a
//! final `"hash"` field. Every line, including the last, ends with LF.
//! Readers accept only byte-exact canonical lines, so `write ∘ read` is the
//! identity on valid files.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};

use serde_json::{Map, Value as Json};

use super::canonical::{json_str, write_body};
use super::{Event, Hash32, IntegrityError, IntegrityKind, ProposedEvent, Trace, TraceHeader};
use crate::value::{value_from_json, Timestamp, Value};

#[derive(Debug, thiserror::Error)]
pub enum TraceFormatError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl TraceFormatError {
    pub fn line(&self) -> Option<usize> {
        match self {
            TraceFormatError::Malformed { line, .. } => Some(*line),
            TraceFormatError::Io(_) => None,
        }
    }
}

fn malformed(line: usize, message: impl Into<String>) -> TraceFormatError {
    TraceFormatError::Malformed {
        line,
        message: message.into(),
    }
}

pub fn header_line(h: &TraceHeader) -> String {
    format!(
        "{{\"trace_id\":{},\"created\":\"{}\",\"scope_key_attr\":{}}}",
        json_str(&h.trace_id),
        h.created,
        json_str(&h.scope_key_attr)
    )
}

pub fn event_line(e: &Event) -> String {
    let mut out = String::with_capacity(320);
    write_body(&mut out, e.body());
    out.push_str(",\"hash\":\"");
    out.push_str(&hex::encode(e.hash));
    out.push_str("\"}");
    out
}

pub fn write_trace<W: Write>(trace: &Trace, mut w: W) -> io::Result<()> {
    writeln!(w, "{}", header_line(&trace.header))?;
    for e in &trace.events {
        writeln!(w, "{}", event_line(e))?;
    }
    w.flush()
}

/// Reads a trace, rejecting the first malformed line.
pub fn read_trace<R: Read>(mut r: R) -> Result<Trace, TraceFormatError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let loaded = read_trace_forensic(&bytes)?;
    match loaded.defect {
        None => Ok(loaded.trace),
        Some(d) => Err(malformed(d.line, d.message)),
    }
}

/// A trace file read for audit: every decodable event up to the first
/// undecodable record, plus that record's position.
#[derive(Debug, Clone, PartialEq)]
pub struct ForensicTrace {
    pub trace: Trace,
    pub defect: Option<RecordDefect>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordDefect {
    pub line: usize,
    pub seq: u64,
    pub message: String,
}

impl ForensicTrace {
    /// The earliest integrity problem in the file, counting an undecodable
    /// record as a `malformed-record` at its position.
    pub fn first_integrity_error(&self) -> Option<IntegrityError> {
        let in_events = super::integrity_issues(&self.trace.events).into_iter().next();
        let in_file = self.defect.as_ref().map(|d| IntegrityError {
            seq: d.seq,
            kind: IntegrityKind::MalformedRecord,
        });
        match (in_events, in_file) {
            (Some(a), Some(b)) => Some(if a.seq <= b.seq { a } else { b }),
            (a, b) => a.or(b),
        }
    }
}

/// Reads a trace file, tolerating damaged event records.
///
/// A damaged header is still a hard error: without it the file is not
/// recognisably a trace.
pub fn read_trace_forensic(bytes: &[u8]) -> Result<ForensicTrace, TraceFormatError> {
    let mut lines: Vec<&[u8]> = bytes.split(|&b| b == b'\n').collect();
    // a well-terminated file yields one empty tail after the final LF
    let terminated = lines.last().is_some_and(|l| l.is_empty());
    if terminated {
        lines.pop();
    }
    let Some(first) = lines.first() else {
        return Err(malformed(1, "missing header line"));
    };
    if lines.len() == 1 && !terminated {
        return Err(malformed(1, "header line is not terminated"));
    }
    let header = parse_header(first).map_err(|m| malformed(1, m))?;
    let mut trace = Trace::new(header);
    let mut defect = None;
    for (i, raw) in lines.iter().enumerate().skip(1) {
        let line = i + 1;
        let is_last = i == lines.len() - 1;
        let parsed = if is_last && !terminated {
            Err("record is not terminated by a line feed".to_string())
        } else {
            parse_event(raw)
        };
        match parsed {
            Ok(e) => trace.events.push(e),
            Err(message) => {
                defect = Some(RecordDefect {
                    line,
                    seq: (i - 1) as u64,
                    message,
                });
                break;
            }
        }
    }
    Ok(ForensicTrace { trace, defect })
}

/// Parses one canonical event line (without its LF). `line` is only used
/// in the error.
pub fn parse_event_line(line: usize, text: &str) -> Result<Event, TraceFormatError> {
    parse_event(text.as_bytes()).map_err(|m| malformed(line, m))
}

pub fn parse_header_line(line: usize, text: &str) -> Result<TraceHeader, TraceFormatError> {
    parse_header(text.as_bytes()).map_err(|m| malformed(line, m))
}

/// An event offered for commitment, as read from a proposal line.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub event: ProposedEvent,
    /// Where the proposer believes the event lands, if it says so.
    pub seq: Option<u64>,
    pub prev_hash: Option<Hash32>,
}

/// Parses a proposal line: an event record without `hash`, where `seq` and
/// `prev_hash` are optional. Key order and spacing are free.
pub fn parse_proposal_line(line: usize, text: &str) -> Result<Proposal, TraceFormatError> {
    let fail = |m: String| malformed(line, m);
    let map = object(text.as_bytes()).map_err(fail)?;
    const KEYS: [&str; 7] = [
        "seq",
        "ts",
        "event_type",
        "attrs",
        "algo_version",
        "contract_version",
        "prev_hash",
    ];
    if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(fail(format!("unexpected field `{k}` in proposal")));
    }
    let attrs = attrs_field(&map).map_err(fail)?;
    let contract_version = u32::try_from(u64_field(&map, "contract_version").map_err(fail)?)
        .map_err(|_| fail("field `contract_version` out of range".into()))?;
    let seq = match map.contains_key("seq") {
        true => Some(u64_field(&map, "seq").map_err(fail)?),
        false => None,
    };
    let prev_hash = match map.contains_key("prev_hash") {
        true => Some(hash_field(&map, "prev_hash").map_err(fail)?),
        false => None,
    };
    Ok(Proposal {
        event: ProposedEvent {
            ts: ts_field(&map, "ts").map_err(fail)?,
            event_type: str_field(&map, "event_type").map_err(fail)?.to_string(),
            attrs,
            algo_version: str_field(&map, "algo_version").map_err(fail)?.to_string(),
            contract_version,
        },
        seq,
        prev_hash,
    })
}

/// The inverse of [`parse_proposal_line`] for a proposal without position.
pub fn proposal_line(p: &ProposedEvent) -> String {
    let mut out = String::from("{\"ts\":\"");
    out.push_str(&p.ts.to_string());
    out.push_str("\",\"event_type\":");
    out.push_str(&json_str(&p.event_type));
    out.push_str(",\"attrs\":");
    out.push_str(&serde_json::to_string(&p.attrs).expect("attrs serialise"));
    out.push_str(",\"algo_version\":");
    out.push_str(&json_str(&p.algo_version));
    out.push_str(&format!(",\"contract_version\":{}}}", p.contract_version));
    out
}

fn object(raw: &[u8]) -> Result<Map<String, Json>, String> {
    let text = std::str::from_utf8(raw).map_err(|e| format!("invalid UTF-8: {e}"))?;
    match serde_json::from_str::<Json>(text) {
        Ok(Json::Object(map)) => Ok(map),
        Ok(_) => Err("record is not a JSON object".into()),
        Err(e) => Err(format!("invalid JSON: {e}")),
    }
}

fn str_field<'a>(map: &'a Map<String, Json>, key: &str) -> Result<&'a str, String> {
    map.get(key)
        .and_then(Json::as_str)
        .ok_or_else(|| format!("missing or non-string field `{key}`"))
}

fn u64_field(map: &Map<String, Json>, key: &str) -> Result<u64, String> {
    map.get(key)
        .and_then(Json::as_u64)
        .ok_or_else(|| format!("missing or non-integer field `{key}`"))
}

fn ts_field(map: &Map<String, Json>, key: &str) -> Result<Timestamp, String> {
    let s = str_field(map, key)?;
    Timestamp::parse(s).ok_or_else(|| format!("field `{key}` is not a canonical timestamp: {s:?}"))
}

fn hash_field(map: &Map<String, Json>, key: &str) -> Result<Hash32, String> {
    let s = str_field(map, key)?;
    let mut out = [0u8; 32];
    hex::decode_to_slice(s, &mut out).map_err(|e| format!("field `{key}`: {e}"))?;
    Ok(out)
}

fn attrs_field(map: &Map<String, Json>) -> Result<BTreeMap<String, Value>, String> {
    let attrs_json = map
        .get("attrs")
        .and_then(Json::as_object)
        .ok_or("missing or non-object field `attrs`")?;
    let mut attrs = BTreeMap::new();
    for (k, v) in attrs_json {
        let v = value_from_json(v).map_err(|m| format!("attribute `{k}`: {m}"))?;
        attrs.insert(k.clone(), v);
    }
    Ok(attrs)
}

fn parse_header(raw: &[u8]) -> Result<TraceHeader, String> {
    let map = object(raw)?;
    let header = TraceHeader {
        trace_id: str_field(&map, "trace_id")?.to_string(),
        created: ts_field(&map, "created")?,
        scope_key_attr: str_field(&map, "scope_key_attr")?.to_string(),
    };
    if header_line(&header).as_bytes() != raw {
        return Err("header is not in canonical form".into());
    }
    Ok(header)
}

fn parse_event(raw: &[u8]) -> Result<Event, String> {
    let map = object(raw)?;
    let attrs = attrs_field(&map)?;
    let contract_version = u32::try_from(u64_field(&map, "contract_version")?)
        .map_err(|_| "field `contract_version` out of range".to_string())?;
    let event = Event {
        seq: u64_field(&map, "seq")?,
        ts: ts_field(&map, "ts")?,
        event_type: str_field(&map, "event_type")?.to_string(),
        attrs,
        algo_version: str_field(&map, "algo_version")?.to_string(),
        contract_version,
        prev_hash: hash_field(&map, "prev_hash")?,
        hash: hash_field(&map, "hash")?,
    };
    if event_line(&event).as_bytes() != raw {
        return Err("record is not in canonical form".into());
    }
    Ok(event)
}
