//! Online norm monitoring.
//!
//! In `Observe` mode events are recorded as they happen and every norm
//! instance they trigger is reported. In `Regiment` mode each event is
//! offered before it is recorded and refused if any instance it triggers is
//! Violated. Both evaluate exactly what [`evaluate_trace`] would for the
//! same event, so a monitor's output stream equals the batch result.
//!
//! [`evaluate_trace`]: crate::eval::evaluate_trace

use crate::dsl::Contract;
use crate::eval::{evaluate_event, EvalError, NormInstanceResult, Status};
use crate::trace::{AppendError, Event, Hash32, ProposedEvent, Sources, Trace, TraceHeader};
use crate::value::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitorMode {
    Observe,
    Regiment,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChainError {
    #[error("expected seq {expected}, got {found}")]
    Seq { expected: u64, found: u64 },
    #[error("event {seq} does not link to the previous event's hash")]
    PrevHash { seq: u64 },
    #[error("event {seq} carries a hash that does not match its contents")]
    Hash { seq: u64 },
    #[error("event {seq} at {ts} is earlier than the previous event at {last}")]
    Timestamp { seq: u64, ts: Timestamp, last: Timestamp },
    #[error("event {seq} has contract_version 0")]
    ContractVersion { seq: u64 },
    #[error(transparent)]
    Append(#[from] AppendError),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MonitorError {
    #[error("monitor is in {0:?} mode")]
    WrongMode(MonitorMode),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    /// The event was committed; `results` are the instances it triggered.
    Allow {
        event: Event,
        results: Vec<NormInstanceResult>,
    },
    /// The event was refused; holds the Violated instances only.
    Block(Vec<NormInstanceResult>),
}

#[derive(Debug, Clone)]
pub struct MonitorState {
    contract: Contract,
    sources: Sources,
    mode: MonitorMode,
    trace: Trace,
    emitted: usize,
}

impl MonitorState {
    pub fn new(contract: Contract, sources: Sources, mode: MonitorMode, header: TraceHeader) -> Self {
        MonitorState {
            contract,
            sources,
            mode,
            trace: Trace::new(header),
            emitted: 0,
        }
    }

    pub fn mode(&self) -> MonitorMode {
        self.mode
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    /// Number of results returned so far.
    pub fn emitted(&self) -> usize {
        self.emitted
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    /// Records an already chained event and evaluates the norms it triggers.
    /// On error the prefix is unchanged.
    pub fn step_observe(&mut self, event: Event) -> Result<Vec<NormInstanceResult>, MonitorError> {
        if self.mode != MonitorMode::Observe {
            return Err(MonitorError::WrongMode(self.mode));
        }
        self.check_link(&event)?;
        self.trace.events.push(event);
        match evaluate_event(&self.contract, &self.trace.events, &self.sources) {
            Ok(results) => {
                self.emitted += results.len();
                Ok(results)
            }
            Err(e) => {
                self.trace.events.pop();
                Err(e.into())
            }
        }
    }

    /// Offers an event for commitment. Undetermined instances do not block.
    pub fn step_regiment(&mut self, proposed: ProposedEvent) -> Result<Decision, MonitorError> {
        if self.mode != MonitorMode::Regiment {
            return Err(MonitorError::WrongMode(self.mode));
        }
        let event = self.trace.chain(proposed).map_err(ChainError::from)?;
        self.trace.events.push(event);
        let results = match evaluate_event(&self.contract, &self.trace.events, &self.sources) {
            Ok(r) => r,
            Err(e) => {
                self.trace.events.pop();
                return Err(e.into());
            }
        };
        let violated: Vec<_> = results
            .iter()
            .filter(|r| r.status == Status::Violated)
            .cloned()
            .collect();
        if !violated.is_empty() {
            self.trace.events.pop();
            self.emitted += violated.len();
            return Ok(Decision::Block(violated));
        }
        self.emitted += results.len();
        let event = self.trace.events.last().expect("just pushed").clone();
        Ok(Decision::Allow { event, results })
    }

    /// Where the next event lands: its seq and the hash it must link to.
    pub fn next_position(&self) -> (u64, Hash32) {
        (self.trace.len() as u64, self.trace.last_hash())
    }

    fn check_link(&self, e: &Event) -> Result<(), ChainError> {
        let (expected, prev) = self.next_position();
        if e.seq != expected {
            return Err(ChainError::Seq {
                expected,
                found: e.seq,
            });
        }
        if e.prev_hash != prev {
            return Err(ChainError::PrevHash { seq: e.seq });
        }
        if e.hash != e.compute_hash() {
            return Err(ChainError::Hash { seq: e.seq });
        }
        if let Some(last) = self.trace.events.last() {
            if e.ts < last.ts {
                return Err(ChainError::Timestamp {
                    seq: e.seq,
                    ts: e.ts,
                    last: last.ts,
                });
            }
        }
        if e.contract_version == 0 {
            return Err(ChainError::ContractVersion { seq: e.seq });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_contract, LUFTHANSA_CONTRACT};
    use crate::eval::evaluate_trace;
    use crate::value::Value;

    fn header() -> TraceHeader {
        TraceHeader {
            trace_id: "m".into(),
            created: Timestamp::from_micros(0),
            scope_key_attr: "flight".into(),
        }
    }

    fn proposal(i: i64, ty: &str, tier: i32) -> ProposedEvent {
        ProposedEvent::new(
            Timestamp::from_micros(i),
            ty,
            [
                ("flight".to_string(), Value::from("LH1")),
                ("tier".to_string(), Value::from(tier)),
                ("route".to_string(), Value::from("TXL-MUC")),
            ],
            "policy-v1",
            1,
        )
    }

    fn monitor(mode: MonitorMode) -> MonitorState {
        MonitorState::new(
            parse_contract(LUFTHANSA_CONTRACT).unwrap(),
            Sources::new(),
            mode,
            header(),
        )
    }

    #[test]
    fn regiment_blocks_tier_skip_and_allows_after_sell_out() {
        let mut m = monitor(MonitorMode::Regiment);
        assert!(matches!(
            m.step_regiment(proposal(0, "tier_opened", 1)).unwrap(),
            Decision::Allow { .. }
        ));
        match m.step_regiment(proposal(1, "tier_opened", 2)).unwrap() {
            Decision::Block(v) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].norm_id, "N1");
                assert_eq!(v[0].trigger_seq, 1);
            }
            other => panic!("expected block, got {other:?}"),
        }
        assert_eq!(m.trace().len(), 1);
        m.step_regiment(proposal(2, "tier_sold_out", 1)).unwrap();
        match m.step_regiment(proposal(3, "tier_opened", 2)).unwrap() {
            Decision::Allow { event, results } => {
                assert_eq!(event.seq, 2);
                assert_eq!(results[0].status, Status::Fulfilled);
                assert_eq!(results[0].evidence_seqs, vec![1, 2]);
            }
            other => panic!("expected allow, got {other:?}"),
        }
        assert!(m.trace().verify_integrity().is_ok());
    }

    #[test]
    fn undetermined_does_not_block() {
        let mut m = monitor(MonitorMode::Regiment);
        let mut p = proposal(0, "price_set", 1);
        p.attrs.insert("price".into(), 90.0.into());
        p.attrs.insert("sale_date".into(), Value::Date(chrono::NaiveDate::from_ymd_opt(2017, 1, 2).unwrap()));
        match m.step_regiment(p).unwrap() {
            Decision::Allow { results, .. } => assert_eq!(results[0].status, Status::Undetermined),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn observe_matches_batch_and_checks_the_chain() {
        let mut t = Trace::new(header());
        for (i, (ty, tier)) in [("tier_opened", 1), ("seat_sold", 1), ("tier_opened", 2)].iter().enumerate() {
            t.append(proposal(i as i64, ty, *tier)).unwrap();
        }
        let mut m = monitor(MonitorMode::Observe);
        let mut streamed = Vec::new();
        for e in &t.events {
            streamed.extend(m.step_observe(e.clone()).unwrap());
        }
        let batch = evaluate_trace(m.contract_ref(), &t, &Sources::new()).unwrap();
        assert_eq!(streamed, batch);
        assert_eq!(m.emitted(), 2);

        let mut m = monitor(MonitorMode::Observe);
        assert_eq!(
            m.step_observe(t.events[1].clone()),
            Err(MonitorError::Chain(ChainError::Seq { expected: 0, found: 1 }))
        );
        m.step_observe(t.events[0].clone()).unwrap();
        let mut forged = t.events[1].clone();
        forged.attrs.insert("tier".into(), 5.into());
        assert_eq!(
            m.step_observe(forged),
            Err(MonitorError::Chain(ChainError::Hash { seq: 1 }))
        );
        assert_eq!(m.trace().len(), 1);
        assert!(matches!(
            m.step_regiment(proposal(9, "x", 1)),
            Err(MonitorError::WrongMode(MonitorMode::Observe))
        ));
    }

    impl MonitorState {
        fn contract_ref(&self) -> &Contract {
            &self.contract
        }
    }
}
