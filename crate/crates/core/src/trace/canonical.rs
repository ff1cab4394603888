use std::collections::BTreeMap;
use std::fmt::Write;

use sha2::{Digest, Sha256};

use super::{Event, Hash32};
use crate::value::{format_date, format_number, Timestamp, Value};

/// The hashed content of an event: everything except its own hash.
#[derive(Debug, Clone, Copy)]
pub struct EventBody<'a> {
    pub seq: u64,
    pub ts: Timestamp,
    pub event_type: &'a str,
    pub attrs: &'a BTreeMap<String, Value>,
    pub algo_version: &'a str,
    pub contract_version: u32,
    pub prev_hash: &'a Hash32,
}

impl<'a> From<&'a Event> for EventBody<'a> {
    fn from(e: &'a Event) -> Self {
        EventBody {
            seq: e.seq,
            ts: e.ts,
            event_type: &e.event_type,
            attrs: &e.attrs,
            algo_version: &e.algo_version,
            contract_version: e.contract_version,
            prev_hash: &e.prev_hash,
        }
    }
}

/// Canonical single-line JSON record of an event body.
///
/// Fields appear in the fixed order `seq, ts, event_type, attrs,
/// algo_version, contract_version, prev_hash`; attribute keys are sorted by
/// code point; numbers use their shortest round-trip decimal text; `ts` is
/// RFC 3339 with six fractional digits and `Z`; `prev_hash` is lowercase hex.
pub fn canonical_bytes(body: EventBody<'_>) -> Vec<u8> {
    let mut out = String::with_capacity(256);
    write_body(&mut out, body);
    out.push('}');
    out.into_bytes()
}

/// Writes the record without its closing brace so that the stored trace
/// line can append the `hash` field.
pub(crate) fn write_body(out: &mut String, body: EventBody<'_>) {
    let _ = write!(
        out,
        "{{\"seq\":{},\"ts\":\"{}\",\"event_type\":{},\"attrs\":{{",
        body.seq,
        body.ts,
        json_str(body.event_type)
    );
    for (i, (k, v)) in body.attrs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&json_str(k));
        out.push(':');
        write_value(out, v);
    }
    let _ = write!(
        out,
        "}},\"algo_version\":{},\"contract_version\":{},\"prev_hash\":\"{}\"",
        json_str(body.algo_version),
        body.contract_version,
        hex::encode(body.prev_hash)
    );
}

fn write_value(out: &mut String, v: &Value) {
    match v {
        Value::Number(n) => out.push_str(&format_number(*n)),
        Value::Str(s) => out.push_str(&json_str(s)),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Date(d) => {
            let _ = write!(out, "{{\"date\":\"{}\"}}", format_date(*d));
        }
    }
}

pub(crate) fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub fn event_hash(body: EventBody<'_>) -> Hash32 {
    Sha256::digest(canonical_bytes(body)).into()
}
