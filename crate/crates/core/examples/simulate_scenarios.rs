//! Simulates the three pricing scenarios, writes their traces and history
//! tables, and summarises what the Lufthansa contract says about each.
//!
//! Usage: `cargo run --example simulate_scenarios [OUT_DIR]`

use std::fs;
use std::path::PathBuf;

use contestable::dsl::{parse_contract, LUFTHANSA_CONTRACT};
use contestable::eval::{evaluate_trace, Status};
use contestable::sim::{generate, Scenario, SimConfig};
use contestable::trace::{write_history, write_trace, Sources};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/scenarios".into()));
    fs::create_dir_all(&dir)?;
    let contract = parse_contract(LUFTHANSA_CONTRACT)?;
    for scenario in [Scenario::Compliant, Scenario::TierSkip, Scenario::PriceGouge] {
        let out = generate(&SimConfig {
            scenario,
            ..Default::default()
        })?;
        let name = scenario.as_str();
        write_trace(&out.trace, fs::File::create(dir.join(format!("{name}.trace")))?)?;
        write_history(&out.history, fs::File::create(dir.join(format!("{name}.csv")))?)?;

        let sources = Sources::from([("history".to_string(), out.history)]);
        let results = evaluate_trace(&contract, &out.trace, &sources)?;
        let count = |norm: &str, s: Status| results.iter().filter(|r| r.norm_id == norm && r.status == s).count();
        println!(
            "{name:<12} {:>3} events  N1 violated {}  N2 violated {}  undetermined {}",
            out.trace.len(),
            count("N1", Status::Violated),
            count("N2", Status::Violated),
            results.iter().filter(|r| r.status == Status::Undetermined).count()
        );
    }
    println!("written to {}", dir.display());
    Ok(())
}
