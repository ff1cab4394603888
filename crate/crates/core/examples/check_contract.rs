//! Parses, validates and reformats a contract file.
//!
//! Usage: `cargo run --example check_contract [PATH]`. Without a path the
//! bundled Lufthansa pricing contract is used.

use std::process::ExitCode;

use contestable::dsl::{format_contract, parse_contract, validate_contract, LUFTHANSA_CONTRACT};

fn main() -> ExitCode {
    let text = match std::env::args().nth(1) {
        Some(path) => match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("{path}: {e}");
                return ExitCode::from(3);
            }
        },
        None => LUFTHANSA_CONTRACT.to_string(),
    };
    let contract = match parse_contract(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("parse error at {e}");
            return ExitCode::from(3);
        }
    };
    let diags = validate_contract(&contract);
    for d in &diags {
        eprintln!("{d}");
    }
    eprintln!(
        "{} v{}: {} source(s), {} norm(s), {} diagnostic(s)",
        contract.id,
        contract.version,
        contract.sources.len(),
        contract.norms.len(),
        diags.len()
    );
    print!("{}", format_contract(&contract));
    if diags.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}
