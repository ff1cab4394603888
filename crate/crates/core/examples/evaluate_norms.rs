//! Evaluates the Lufthansa pricing norms against a simulated price-gouging
//! run and prints every norm instance with its status.
//!
//! Usage: `cargo run --example evaluate_norms [SEED]`

use contestable::dsl::{parse_contract, LUFTHANSA_CONTRACT};
use contestable::eval::{evaluate_trace, Status};
use contestable::sim::{generate, Scenario, SimConfig};
use contestable::trace::Sources;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(42);
    let contract = parse_contract(LUFTHANSA_CONTRACT)?;
    let out = generate(&SimConfig {
        scenario: Scenario::PriceGouge,
        seed,
        ..Default::default()
    })?;
    let sources = Sources::from([("history".to_string(), out.history)]);
    let results = evaluate_trace(&contract, &out.trace, &sources)?;
    for r in &results {
        let deviation = r
            .computed
            .get("abs(p - h) / h")
            .and_then(|v| v.as_number())
            .map(|d| format!("  deviation {d:.4}"))
            .unwrap_or_default();
        let algo = &out.trace.events[r.trigger_seq as usize].algo_version;
        println!("seq {:>3} {} {:<12} {algo}{deviation}", r.trigger_seq, r.norm_id, format!("{:?}", r.status));
    }
    let violated = results.iter().filter(|r| r.status == Status::Violated).count();
    println!("{} instance(s), {violated} violated", results.len());
    Ok(())
}
