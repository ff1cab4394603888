//! Feeds a simulated run to an observing monitor one event at a time and
//! checks that the streamed results equal a batch evaluation.
//!
//! Usage: `cargo run --example monitor_observe [compliant|tier-skip|price-gouge]`

use contestable::dsl::{parse_contract, LUFTHANSA_CONTRACT};
use contestable::eval::{evaluate_trace, Status};
use contestable::monitor::{MonitorMode, MonitorState};
use contestable::sim::{generate, Scenario, SimConfig};
use contestable::trace::Sources;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = match std::env::args().nth(1).as_deref() {
        None | Some("tier-skip") => Scenario::TierSkip,
        Some("compliant") => Scenario::Compliant,
        Some("price-gouge") => Scenario::PriceGouge,
        Some(other) => return Err(format!("unknown scenario {other}").into()),
    };
    let contract = parse_contract(LUFTHANSA_CONTRACT)?;
    let out = generate(&SimConfig {
        scenario,
        ..Default::default()
    })?;
    let sources = Sources::from([("history".to_string(), out.history)]);

    let mut monitor = MonitorState::new(contract.clone(), sources.clone(), MonitorMode::Observe, out.trace.header.clone());
    let mut streamed = Vec::new();
    for event in &out.trace.events {
        for r in monitor.step_observe(event.clone())? {
            if r.status == Status::Violated {
                println!("violation of {} at seq {} ({})", r.norm_id, r.trigger_seq, event.event_type);
            }
            streamed.push(r);
        }
    }
    let batch = evaluate_trace(&contract, &out.trace, &sources)?;
    println!(
        "{} event(s), {} result(s); streaming {} batch",
        out.trace.len(),
        streamed.len(),
        if streamed == batch { "matches" } else { "DIFFERS FROM" }
    );
    Ok(())
}
