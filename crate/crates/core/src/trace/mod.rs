//! Append-only, SHA-256 hash-chained event traces.
//!
//! Every event stores the hash of its predecessor (`prev_hash`, all zeros
//! for the first event) and its own hash over [`canonical_bytes`]. Any edit
//! to a stored event therefore breaks either its own hash or the chain.
//! Events also record the decision algorithm version and the contract
//! version in force, so a later contest can be bound to both.

mod canonical;
mod history;
mod io;

use std::collections::BTreeMap;
use std::fmt;

pub use canonical::{canonical_bytes, event_hash, EventBody};
pub use history::{
    read_history, sources_content_hash, write_history, HistoryError, HistoryTable, Sources,
};
pub use io::{
    event_line, header_line, parse_event_line, parse_header_line, parse_proposal_line,
    proposal_line, read_trace, read_trace_forensic, write_trace, ForensicTrace, Proposal,
    RecordDefect, TraceFormatError,
};

use crate::value::{Timestamp, Value};

pub type Hash32 = [u8; 32];

pub const ZERO_HASH: Hash32 = [0u8; 32];

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub seq: u64,
    pub ts: Timestamp,
    pub event_type: String,
    pub attrs: BTreeMap<String, Value>,
    pub algo_version: String,
    pub contract_version: u32,
    pub prev_hash: Hash32,
    pub hash: Hash32,
}

impl Event {
    pub fn body(&self) -> EventBody<'_> {
        EventBody::from(self)
    }

    pub fn attr(&self, name: &str) -> Option<&Value> {
        self.attrs.get(name)
    }

    /// Hash of the event's current content, ignoring the stored `hash`.
    pub fn compute_hash(&self) -> Hash32 {
        event_hash(self.body())
    }
}

/// An event before it is chained: what a producer proposes to record.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposedEvent {
    pub ts: Timestamp,
    pub event_type: String,
    pub attrs: BTreeMap<String, Value>,
    pub algo_version: String,
    pub contract_version: u32,
}

impl ProposedEvent {
    pub fn new(
        ts: Timestamp,
        event_type: impl Into<String>,
        attrs: impl IntoIterator<Item = (String, Value)>,
        algo_version: impl Into<String>,
        contract_version: u32,
    ) -> Self {
        ProposedEvent {
            ts,
            event_type: event_type.into(),
            attrs: attrs.into_iter().collect(),
            algo_version: algo_version.into(),
            contract_version,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceHeader {
    pub trace_id: String,
    pub created: Timestamp,
    /// Attribute that delimits a contest's scope (e.g. `flight`).
    pub scope_key_attr: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AppendError {
    #[error("timestamp {ts} precedes the last recorded timestamp {last}")]
    OutOfOrderTimestamp { ts: Timestamp, last: Timestamp },
    #[error("attribute `{0}` is not a finite number")]
    NonFiniteNumber(String),
    #[error("contract version must be at least 1")]
    InvalidContractVersion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntegrityKind {
    HashMismatch,
    ChainBreak,
    SeqGap,
    TsRegress,
    /// The stored record could not be decoded, so its hash cannot be checked.
    MalformedRecord,
}

impl IntegrityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            IntegrityKind::HashMismatch => "hash-mismatch",
            IntegrityKind::ChainBreak => "chain-break",
            IntegrityKind::SeqGap => "seq-gap",
            IntegrityKind::TsRegress => "ts-regress",
            IntegrityKind::MalformedRecord => "malformed-record",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            IntegrityKind::HashMismatch,
            IntegrityKind::ChainBreak,
            IntegrityKind::SeqGap,
            IntegrityKind::TsRegress,
            IntegrityKind::MalformedRecord,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
    }
}

impl fmt::Display for IntegrityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("integrity violation at seq {seq}: {kind}")]
pub struct IntegrityError {
    pub seq: u64,
    pub kind: IntegrityKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("seq {seq} is out of range for a trace of {len} events")]
pub struct SeqOutOfRange {
    pub seq: u64,
    pub len: usize,
}

impl Trace {
    pub fn new(header: TraceHeader) -> Self {
        Trace {
            header,
            events: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn last_hash(&self) -> Hash32 {
        self.events.last().map_or(ZERO_HASH, |e| e.hash)
    }

    pub fn get(&self, seq: u64) -> Option<&Event> {
        self.events.get(usize::try_from(seq).ok()?)
    }

    /// Builds the next chained event for this trace without recording it.
    pub fn chain(&self, proposed: ProposedEvent) -> Result<Event, AppendError> {
        if let Some(last) = self.events.last() {
            if proposed.ts < last.ts {
                return Err(AppendError::OutOfOrderTimestamp {
                    ts: proposed.ts,
                    last: last.ts,
                });
            }
        }
        if proposed.contract_version < 1 {
            return Err(AppendError::InvalidContractVersion);
        }
        let mut attrs = proposed.attrs;
        for (name, v) in attrs.iter_mut() {
            if let Value::Number(n) = v {
                if !n.is_finite() {
                    return Err(AppendError::NonFiniteNumber(name.clone()));
                }
                // one representation for zero
                if *n == 0.0 {
                    *n = 0.0;
                }
            }
        }
        let mut event = Event {
            seq: self.events.len() as u64,
            ts: proposed.ts,
            event_type: proposed.event_type,
            attrs,
            algo_version: proposed.algo_version,
            contract_version: proposed.contract_version,
            prev_hash: self.last_hash(),
            hash: ZERO_HASH,
        };
        event.hash = event.compute_hash();
        Ok(event)
    }

    /// Appends a new event, chaining it to the current tail.
    pub fn append(&mut self, proposed: ProposedEvent) -> Result<&Event, AppendError> {
        let event = self.chain(proposed)?;
        self.events.push(event);
        Ok(self.events.last().expect("just pushed"))
    }

    /// Checks every trace invariant and reports the smallest offending seq.
    pub fn verify_integrity(&self) -> Result<(), IntegrityError> {
        match integrity_issues(&self.events).into_iter().next() {
            Some(err) => Err(err),
            None => Ok(()),
        }
    }

    /// The prefix holding events `0..=seq`.
    pub fn slice_until(&self, seq: u64) -> Result<Trace, SeqOutOfRange> {
        let end = usize::try_from(seq)
            .ok()
            .filter(|&i| i < self.events.len())
            .ok_or(SeqOutOfRange {
                seq,
                len: self.events.len(),
            })?;
        Ok(Trace {
            header: self.header.clone(),
            events: self.events[..=end].to_vec(),
        })
    }
}

/// Every integrity problem in `events`, ordered by position.
///
/// At each position the checks run in the order seq, own hash, chain link,
/// timestamp; the chain link is compared against the *recomputed* hash of
/// the predecessor, so content tampering of event `i` shows up both as a
/// hash mismatch at `i` and as a chain break at `i + 1`.
pub fn integrity_issues(events: &[Event]) -> Vec<IntegrityError> {
    let mut issues = Vec::new();
    let mut prev: Option<(Hash32, Timestamp)> = None;
    for (i, e) in events.iter().enumerate() {
        let at = i as u64;
        let recomputed = e.compute_hash();
        let report = |kind| IntegrityError { seq: at, kind };
        if e.seq != at {
            issues.push(report(IntegrityKind::SeqGap));
        }
        if e.hash != recomputed {
            issues.push(report(IntegrityKind::HashMismatch));
        }
        let expected_prev = prev.map_or(ZERO_HASH, |(h, _)| h);
        if e.prev_hash != expected_prev {
            issues.push(report(IntegrityKind::ChainBreak));
        }
        if let Some((_, last_ts)) = prev {
            if e.ts < last_ts {
                issues.push(report(IntegrityKind::TsRegress));
            }
        }
        prev = Some((recomputed, e.ts));
    }
    issues
}
