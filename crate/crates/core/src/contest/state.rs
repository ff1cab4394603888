use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::trace::{Event, SeqOutOfRange, Trace};
use crate::value::Value;

/// Tier bookkeeping for one scope key (one flight).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ScopeState {
    pub open_tiers: BTreeSet<i64>,
    /// Seats left per tier, known once the tier was opened with a capacity.
    pub remaining_seats: BTreeMap<i64, i64>,
    pub posted_price: BTreeMap<i64, f64>,
    pub sold_out: BTreeSet<i64>,
}

/// The state of the world as recorded up to some seq.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct WorldState {
    pub at_seq: Option<u64>,
    pub competitor_bankrupt: bool,
    pub scopes: BTreeMap<String, ScopeState>,
}

impl WorldState {
    /// Left fold of `events`; unknown event types are no-ops.
    pub fn fold(events: &[Event], scope_key_attr: &str) -> Self {
        let mut state = WorldState::default();
        for e in events {
            state.apply(e, scope_key_attr);
        }
        state
    }

    pub fn scope(&self, key: &str) -> Option<&ScopeState> {
        self.scopes.get(key)
    }

    fn apply(&mut self, e: &Event, scope_key_attr: &str) {
        self.at_seq = Some(e.seq);
        if e.event_type == "competitor_bankruptcy" {
            self.competitor_bankrupt = true;
            return;
        }
        let Some(key) = e.attr(scope_key_attr).map(Value::key_text) else {
            return;
        };
        let Some(tier) = e.attr("tier").and_then(whole_number) else {
            return;
        };
        let handled = matches!(
            e.event_type.as_str(),
            "tier_opened" | "seat_sold" | "tier_sold_out" | "price_set"
        );
        if !handled {
            return;
        }
        let s = self.scopes.entry(key).or_default();
        match e.event_type.as_str() {
            "tier_opened" => {
                s.open_tiers.insert(tier);
                if let Some(cap) = e.attr("capacity").and_then(whole_number) {
                    s.remaining_seats.insert(tier, cap);
                }
            }
            "seat_sold" => {
                if let Some(left) = s.remaining_seats.get_mut(&tier) {
                    *left -= 1;
                    if *left <= 0 {
                        s.sold_out.insert(tier);
                        s.open_tiers.remove(&tier);
                    }
                }
            }
            "tier_sold_out" => {
                s.sold_out.insert(tier);
                s.open_tiers.remove(&tier);
                s.remaining_seats.insert(tier, 0);
            }
            "price_set" => {
                if let Some(p) = e.attr("price").and_then(Value::as_number) {
                    s.posted_price.insert(tier, p);
                }
            }
            _ => unreachable!(),
        }
    }
}

fn whole_number(v: &Value) -> Option<i64> {
    let n = v.as_number()?;
    (n.fract() == 0.0 && n.abs() < 9.0e15).then_some(n as i64)
}

/// The world as it stood right after event `at_seq`.
pub fn reconstruct_state(trace: &Trace, at_seq: u64) -> Result<WorldState, SeqOutOfRange> {
    let prefix = trace.slice_until(at_seq)?;
    Ok(WorldState::fold(
        &prefix.events,
        &trace.header.scope_key_attr,
    ))
}
