//! The contest report document: one pretty-printed JSON object with a
//! fixed key order, LF line endings and a trailing newline.

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::eval::{NormInstanceResult, Status};
use crate::trace::{Hash32, IntegrityError, IntegrityKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Compliant,
    NonCompliant,
    Inconclusive,
}

impl Verdict {
    /// The verdict implied by instance statuses on an intact trace.
    pub fn from_results(results: &[NormInstanceResult]) -> Self {
        if results.iter().any(|r| r.status == Status::Violated) {
            Verdict::NonCompliant
        } else if results.iter().any(|r| r.status == Status::Undetermined) {
            Verdict::Inconclusive
        } else {
            Verdict::Compliant
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContestReport {
    pub decision_seq: u64,
    pub contract_id: String,
    pub contract_version: u32,
    /// `None` only when the decision event could not be read at all.
    pub algo_version_at_decision: Option<String>,
    #[serde(with = "integrity_field")]
    pub trace_integrity: Option<IntegrityError>,
    pub scope_seqs: Vec<u64>,
    pub results: Vec<NormInstanceResult>,
    pub verdict: Verdict,
    #[serde(with = "hex_hash")]
    pub history_content_hash: Hash32,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("verdict {stated:?} does not follow from the results (expected {expected:?})")]
    InconsistentVerdict { stated: Verdict, expected: Verdict },
}

impl ContestReport {
    /// The verdict this report must carry.
    pub fn expected_verdict(&self) -> Verdict {
        if self.trace_integrity.is_some() {
            Verdict::Inconclusive
        } else {
            Verdict::from_results(&self.results)
        }
    }

    /// Parses a report and checks its verdict against its results.
    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let report: ContestReport = serde_json::from_str(text)?;
        let expected = report.expected_verdict();
        if report.verdict != expected {
            return Err(ReportError::InconsistentVerdict {
                stated: report.verdict,
                expected,
            });
        }
        Ok(report)
    }
}

pub fn render_report(report: &ContestReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("reports hold only finite numbers");
    text.push('\n');
    text
}

mod integrity_field {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Failure {
        seq: u64,
        kind: String,
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Ok(String),
        Failure(Failure),
    }

    pub fn serialize<S: Serializer>(v: &Option<IntegrityError>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_str("ok"),
            Some(e) => Failure {
                seq: e.seq,
                kind: e.kind.as_str().to_string(),
            }
            .serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<IntegrityError>, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Ok(s) if s == "ok" => Ok(None),
            Repr::Ok(s) => Err(de::Error::custom(format!("unknown integrity status {s:?}"))),
            Repr::Failure(f) => {
                let kind = IntegrityKind::parse(&f.kind)
                    .ok_or_else(|| de::Error::custom(format!("unknown integrity kind {:?}", f.kind)))?;
                Ok(Some(IntegrityError { seq: f.seq, kind }))
            }
        }
    }
}

mod hex_hash {
    use super::*;

    pub fn serialize<S: Serializer>(h: &Hash32, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(h))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Hash32, D::Error> {
        let text = String::deserialize(d)?;
        if text.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(de::Error::custom("hash must be lowercase hex"));
        }
        let mut out = [0u8; 32];
        hex::decode_to_slice(&text, &mut out).map_err(de::Error::custom)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn result(status: Status) -> NormInstanceResult {
        NormInstanceResult {
            norm_id: "N1".into(),
            trigger_seq: 3,
            bindings: BTreeMap::from([("k".to_string(), 2.into())]),
            status,
            evidence_seqs: vec![3],
            computed: BTreeMap::new(),
            diagnostic: None,
        }
    }

    fn report(statuses: &[Status]) -> ContestReport {
        let results: Vec<_> = statuses.iter().map(|&s| result(s)).collect();
        ContestReport {
            decision_seq: 3,
            contract_id: "c".into(),
            contract_version: 1,
            algo_version_at_decision: Some("policy-v1".into()),
            trace_integrity: None,
            scope_seqs: vec![0, 3],
            verdict: Verdict::from_results(&results),
            results,
            history_content_hash: [0xab; 32],
        }
    }

    #[test]
    fn verdict_function() {
        use Status::*;
        assert_eq!(report(&[]).verdict, Verdict::Compliant);
        assert_eq!(report(&[Fulfilled, Inapplicable]).verdict, Verdict::Compliant);
        assert_eq!(report(&[Fulfilled, Undetermined]).verdict, Verdict::Inconclusive);
        assert_eq!(report(&[Undetermined, Violated]).verdict, Verdict::NonCompliant);
    }

    #[test]
    fn key_order_and_layout() {
        let text = render_report(&report(&[Status::Fulfilled]));
        let keys = [
            "\"decision_seq\"",
            "\"contract_id\"",
            "\"contract_version\"",
            "\"algo_version_at_decision\"",
            "\"trace_integrity\": \"ok\"",
            "\"scope_seqs\"",
            "\"results\"",
            "\"verdict\": \"Compliant\"",
            "\"history_content_hash\"",
        ];
        let mut last = 0;
        for k in keys {
            let at = text.find(k).unwrap_or_else(|| panic!("{k} missing"));
            assert!(at > last || last == 0, "{k} out of order");
            last = at;
        }
        assert!(text.starts_with("{\n  \"decision_seq\": 3,\n"));
        assert!(text.ends_with("}\n"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn renders_are_deterministic_and_reload() {
        let r = report(&[Status::Violated]);
        assert_eq!(render_report(&r), render_report(&r.clone()));
        assert_eq!(ContestReport::from_json(&render_report(&r)).unwrap(), r);
    }

    #[test]
    fn integrity_failure_round_trips() {
        let mut r = report(&[]);
        r.trace_integrity = Some(IntegrityError {
            seq: 4,
            kind: IntegrityKind::ChainBreak,
        });
        r.results.clear();
        r.verdict = Verdict::Inconclusive;
        let text = render_report(&r);
        assert!(text.contains("\"trace_integrity\": {\n    \"seq\": 4,\n    \"kind\": \"chain-break\"\n  }"));
        assert_eq!(ContestReport::from_json(&text).unwrap(), r);
    }

    #[test]
    fn load_rejects_inconsistent_verdict() {
        let mut r = report(&[Status::Violated]);
        r.verdict = Verdict::Compliant;
        assert!(matches!(
            ContestReport::from_json(&render_report(&r)),
            Err(ReportError::InconsistentVerdict { .. })
        ));
        let mut r = report(&[]);
        r.trace_integrity = Some(IntegrityError {
            seq: 0,
            kind: IntegrityKind::HashMismatch,
        });
        assert!(ContestReport::from_json(&render_report(&r)).is_err());
    }
}
