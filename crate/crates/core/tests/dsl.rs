mod common;

use std::fs;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use contestable::dsl::{
    format_contract, parse_contract, token_spans, validate_contract, Contract, LUFTHANSA_CONTRACT,
};

use common::*;

fn generated(seed: u64) -> Contract {
    random_contract(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// Checks that deleting any single token of `text` either still parses or
/// fails on the edited line, the next line, or the line of the token that
/// followed the deleted one.
fn check_error_locality(text: &str) -> Result<(), String> {
    let spans = token_spans(text).map_err(|e| e.to_string())?;
    for (i, span) in spans.iter().enumerate() {
        let mut edited = String::with_capacity(text.len());
        edited.push_str(&text[..span.range.start]);
        edited.push_str(&text[span.range.end..]);
        let Err(err) = parse_contract(&edited) else {
            continue;
        };
        let next = spans.get(i + 1).map_or(span.line, |s| s.line);
        let last = next.max(span.line + 1);
        if err.line < span.line || err.line > last {
            return Err(format!(
                "deleting {:?} at {}:{} reported {err} outside lines {}..={last}",
                &text[span.range.clone()],
                span.line,
                span.col,
                span.line
            ));
        }
    }
    Ok(())
}

#[test]
fn reference_contract_parses_and_validates() {
    let c = lufthansa();
    assert_eq!(c.id, "lufthansa-pricing");
    assert_eq!(c.norms.len(), 2);
    assert_eq!(c.sources.len(), 1);
    assert!(validate_contract(&c).is_empty());
}

#[test]
fn reference_contract_round_trips_and_formats_idempotently() {
    let c = lufthansa();
    let text = format_contract(&c);
    assert_eq!(parse_contract(&text).unwrap(), c);
    assert_eq!(format_contract(&parse_contract(&text).unwrap()), text);
}

#[test]
fn minimal_contract_has_no_norms() {
    let c = parse_contract(r#"contract "x" version 1 effective 2017-01-01 { }"#).unwrap();
    assert!(c.norms.is_empty());
    assert!(c.sources.is_empty());
}

#[test]
fn version_zero_is_rejected() {
    let c = parse_contract(r#"contract "x" version 0 effective 2017-01-01 { }"#);
    assert!(c.is_err() || !validate_contract(&c.unwrap()).is_empty());
}

#[test]
fn unbound_variable_is_named() {
    let text = r#"contract "x" version 1 effective 2017-01-01 {
  norm N1 "t" {
    on event seat_sold(tier = k)
    require k > q
  }
}"#;
    let diags = validate_contract(&parse_contract(text).unwrap());
    assert_eq!(diags.len(), 1);
    assert!(diags[0].to_string().contains('q'), "{}", diags[0]);
}

#[test]
fn duplicate_norm_ids_yield_one_diagnostic() {
    let text = fs::read_to_string(fixtures().join("duplicate_norm.contract")).unwrap();
    let diags = validate_contract(&parse_contract(&text).unwrap());
    assert_eq!(diags.len(), 1);
    assert!(diags[0].to_string().contains("N1"), "{}", diags[0]);
}

#[test]
fn nested_let_matches_golden_format() {
    let golden = fs::read_to_string(fixtures().join("golden/nested_let.contract")).unwrap();
    let c = parse_contract(&golden).unwrap();
    assert!(validate_contract(&c).is_empty());
    assert_eq!(format_contract(&c), golden);
}

#[test]
fn reference_contract_error_locality() {
    check_error_locality(LUFTHANSA_CONTRACT).unwrap();
    check_error_locality(&format_contract(&lufthansa())).unwrap();
}

#[test]
fn token_spans_cover_token_text() {
    let spans = token_spans("norm N1 \"t\"\n  x >= 1.5").unwrap();
    let text = "norm N1 \"t\"\n  x >= 1.5";
    let toks: Vec<&str> = spans.iter().map(|s| &text[s.range.clone()]).collect();
    assert_eq!(toks, ["norm", "N1", "\"t\"", "x", ">=", "1.5"]);
    assert_eq!((spans[3].line, spans[3].col), (2, 3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn format_then_parse_is_identity(seed in any::<u64>()) {
        let c = generated(seed);
        let text = format_contract(&c);
        let back = parse_contract(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(format_contract(&back), text);
    }

    #[test]
    fn parsing_is_deterministic(seed in any::<u64>()) {
        let text = format_contract(&generated(seed));
        prop_assert_eq!(parse_contract(&text), parse_contract(&text));
    }

    #[test]
    fn single_token_deletion_is_reported_locally(seed in any::<u64>()) {
        let text = format_contract(&generated(seed));
        check_error_locality(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
    }
}
