//! Contests a single decision of a simulated tier-skip run: rebuilds the
//! state of the world at that point, re-evaluates the norms and renders
//! the report.
//!
//! Usage: `cargo run --example contest_decision [SEQ]`

use contestable::contest::{contest_decision, reconstruct_state, render_report, ContestRequest};
use contestable::dsl::{parse_contract, LUFTHANSA_CONTRACT};
use contestable::sim::{generate, Scenario, SimConfig};
use contestable::trace::Sources;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let contract = parse_contract(LUFTHANSA_CONTRACT)?;
    let out = generate(&SimConfig {
        scenario: Scenario::TierSkip,
        ..Default::default()
    })?;
    let skip = out
        .trace
        .events
        .iter()
        .filter(|e| e.event_type == "tier_opened")
        .nth(1)
        .ok_or("no second tier opened")?
        .seq;
    let seq = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(skip);

    let state = reconstruct_state(&out.trace, seq)?;
    for (flight, scope) in &state.scopes {
        eprintln!(
            "state at seq {seq} for {flight}: open tiers {:?}, sold out {:?}, seats left {:?}",
            scope.open_tiers, scope.sold_out, scope.remaining_seats
        );
    }

    let sources = Sources::from([("history".to_string(), out.history)]);
    let report = contest_decision(ContestRequest::new(&contract, &out.trace, &sources, seq))?;
    eprintln!("verdict: {:?}", report.verdict);
    print!("{}", render_report(&report));
    Ok(())
}
