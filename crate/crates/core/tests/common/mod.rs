//! Generators and fixtures shared by the integration tests and the
//! acceptance harness.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::{Datelike, NaiveDate};
use rand::seq::IndexedRandom;
use rand::Rng;

use contestable::dsl::{
    parse_contract, BinOp, Binder, Column, ColumnKind, Contract, EventPattern, Expr, NormDef, SourceDecl,
    LUFTHANSA_CONTRACT,
};
use contestable::sim::history_columns;
use contestable::trace::{Event, HistoryTable, ProposedEvent, Sources, Trace, TraceHeader, ZERO_HASH};
use contestable::{Timestamp, Value};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn lufthansa() -> Contract {
    parse_contract(LUFTHANSA_CONTRACT).expect("shipped contract parses")
}

pub fn header(id: &str) -> TraceHeader {
    TraceHeader {
        trace_id: id.to_string(),
        created: Timestamp::at(date(2017, 10, 25), 0, 0),
        scope_key_attr: "flight".into(),
    }
}

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

/// The sample event whose canonical bytes and SHA-256 are frozen in
/// `fixtures/golden`.
pub fn sample_event() -> Event {
    let attrs = BTreeMap::from([
        ("flight".to_string(), Value::from("LH100")),
        ("price".to_string(), Value::Number(129.99)),
        ("route".to_string(), Value::from("TXL-MUC")),
        ("sale_date".to_string(), Value::Date(date(2017, 10, 28))),
        ("tier".to_string(), Value::Number(2.0)),
    ]);
    let mut e = Event {
        seq: 0,
        ts: Timestamp::at(date(2017, 10, 28), 9 * 3600 + 15 * 60, 0),
        event_type: "price_set".into(),
        attrs,
        algo_version: "policy-v1".into(),
        contract_version: 1,
        prev_hash: ZERO_HASH,
        hash: ZERO_HASH,
    };
    e.hash = e.compute_hash();
    e
}

const FLIGHTS: [&str; 3] = ["LH100", "LH200", "AB300"];
const ROUTES: [&str; 2] = ["TXL-MUC", "TXL-FRA"];
const EVENT_TYPES: [&str; 6] = [
    "tier_opened",
    "tier_sold_out",
    "price_set",
    "seat_sold",
    "competitor_bankruptcy",
    "check_in",
];

fn sale_dates() -> Vec<NaiveDate> {
    (25..=31).map(|d| date(2017, 10, d)).collect()
}

/// A history table over the airline vocabulary. Some (route, tier, day)
/// combinations are left out so that averages can come out empty.
pub fn random_history<R: Rng>(rng: &mut R) -> Sources {
    let mut table = HistoryTable::new(history_columns());
    if rng.random_bool(0.1) {
        return Sources::from([("history".to_string(), table)]);
    }
    for route in ROUTES {
        for tier in 1..=3 {
            for sale in sale_dates() {
                if rng.random_bool(0.15) {
                    continue;
                }
                for year in 2012..=2016 {
                    let base = 60.0 + 30.0 * tier as f64;
                    let price = (base * rng.random_range(0.8..1.2) * 100.0).round() / 100.0;
                    table.rows.push(vec![
                        route.into(),
                        Value::Date(date(year, 10, sale.day())),
                        Value::Number(tier as f64),
                        Value::Number(price),
                    ]);
                }
            }
        }
    }
    Sources::from([("history".to_string(), table)])
}

fn random_attrs<R: Rng>(rng: &mut R, event_type: &str) -> Vec<(String, Value)> {
    let flight = *FLIGHTS.choose(rng).unwrap();
    let route = *ROUTES.choose(rng).unwrap();
    let tier = rng.random_range(1..=4) as f64;
    let mut attrs = vec![
        ("flight".to_string(), Value::from(flight)),
        ("route".to_string(), Value::from(route)),
        ("tier".to_string(), Value::Number(tier)),
    ];
    match event_type {
        "tier_opened" => attrs.push(("capacity".into(), Value::Number(rng.random_range(1..=30) as f64))),
        "price_set" | "seat_sold" => {
            let price = (rng.random_range(40.0..260.0f64) * 100.0).round() / 100.0;
            attrs.push(("price".into(), Value::Number(price)));
            attrs.push(("sale_date".into(), Value::Date(*sale_dates().choose(rng).unwrap())));
        }
        "competitor_bankruptcy" => {
            attrs.retain(|(k, _)| k == "route");
            attrs.push(("competitor".into(), Value::from("Air Berlin")));
        }
        _ => {}
    }
    attrs
}

/// One random proposal at or after `after`.
pub fn random_proposal<R: Rng>(rng: &mut R, after: Timestamp) -> ProposedEvent {
    let event_type = *EVENT_TYPES.choose(rng).unwrap();
    let ts = Timestamp::from_micros(after.as_micros() + rng.random_range(0..3_600_000_000i64));
    let algo = if rng.random_bool(0.8) { "policy-v1" } else { "policy-v2" };
    ProposedEvent::new(ts, event_type, random_attrs(rng, event_type), algo, 1)
}

/// A valid random trace of `len` events.
pub fn random_trace<R: Rng>(rng: &mut R, len: usize) -> Trace {
    let mut t = Trace::new(header("random"));
    let mut ts = Timestamp::at(date(2017, 10, 25), 0, 0);
    for _ in 0..len {
        let p = random_proposal(rng, ts);
        ts = p.ts;
        t.append(p).expect("generated events are ordered and finite");
    }
    t
}

/// Proposals that follow the tier policy for one flight: tiers open only
/// after the previous one sold out, prices match the history average.
/// Occasionally a rule is broken so that Regiment has something to block.
pub fn policy_proposals<R: Rng>(rng: &mut R, len: usize, history: &Sources, break_rules: bool) -> Vec<ProposedEvent> {
    let flight = *FLIGHTS.choose(rng).unwrap();
    let route = *ROUTES.choose(rng).unwrap();
    let mut out = Vec::new();
    let mut ts = Timestamp::at(date(2017, 10, 25), 0, 0);
    let mut tier = 1.0;
    let mut left = 0u32;
    let base = |a: Vec<(&str, Value)>| -> Vec<(String, Value)> {
        let mut attrs = vec![
            ("flight".to_string(), Value::from(flight)),
            ("route".to_string(), Value::from(route)),
        ];
        attrs.extend(a.into_iter().map(|(k, v)| (k.to_string(), v)));
        attrs
    };
    while out.len() < len {
        ts = Timestamp::from_micros(ts.as_micros() + rng.random_range(0..600_000_000i64));
        let day = *sale_dates().choose(rng).unwrap();
        let fair = mean_price(history, route, tier, day).unwrap_or(100.0);
        let (ty, attrs) = if left == 0 && out.is_empty() {
            left = rng.random_range(1..=4);
            ("tier_opened", base(vec![("tier", tier.into()), ("capacity", Value::Number(left as f64))]))
        } else if left == 0 {
            tier += 1.0;
            left = rng.random_range(1..=4);
            ("tier_opened", base(vec![("tier", tier.into()), ("capacity", Value::Number(left as f64))]))
        } else if break_rules && rng.random_bool(0.1) {
            if rng.random_bool(0.5) {
                ("tier_opened", base(vec![("tier", Value::Number(tier + 1.0)), ("capacity", 1.into())]))
            } else {
                let p = (fair * rng.random_range(1.31..1.6) * 100.0).round() / 100.0;
                ("price_set", base(vec![("tier", tier.into()), ("price", p.into()), ("sale_date", day.into())]))
            }
        } else if rng.random_bool(0.3) {
            let p = (fair * rng.random_range(0.9..1.1) * 100.0).round() / 100.0;
            ("price_set", base(vec![("tier", tier.into()), ("price", p.into()), ("sale_date", day.into())]))
        } else {
            left -= 1;
            if left == 0 {
                out.push(ProposedEvent::new(ts, "seat_sold", base(vec![("tier", tier.into())]), "policy-v1", 1));
                ("tier_sold_out", base(vec![("tier", tier.into())]))
            } else {
                ("seat_sold", base(vec![("tier", tier.into())]))
            }
        };
        out.push(ProposedEvent::new(ts, ty, attrs, "policy-v1", 1));
    }
    out.truncate(len);
    out
}

fn mean_price(history: &Sources, route: &str, tier: f64, day: NaiveDate) -> Option<f64> {
    let t = history.get("history")?;
    let prices: Vec<f64> = t
        .rows
        .iter()
        .filter(|r| {
            r[0] == Value::from(route)
                && r[2] == Value::Number(tier)
                && r[1].as_date().is_some_and(|d| d.month() == day.month() && d.day() == day.day())
        })
        .map(|r| r[3].as_number().unwrap())
        .collect();
    (!prices.is_empty()).then(|| prices.iter().sum::<f64>() / prices.len() as f64)
}

const KEYWORDS: [&str; 26] = [
    "contract", "version", "effective", "source", "from", "number", "string", "date", "norm", "on", "when",
    "require", "event", "let", "in", "avg", "where", "exists", "before", "trigger", "abs", "and", "or", "not",
    "true", "false",
];

pub fn random_ident<R: Rng>(rng: &mut R) -> String {
    const HEAD: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_";
    const TAIL: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789_";
    loop {
        let len = rng.random_range(1..=8);
        let mut s = String::new();
        s.push(*HEAD.choose(rng).unwrap() as char);
        for _ in 1..len {
            s.push(*TAIL.choose(rng).unwrap() as char);
        }
        if !KEYWORDS.contains(&s.as_str()) {
            return s;
        }
    }
}

pub fn random_string<R: Rng>(rng: &mut R) -> String {
    const CHARS: [char; 12] = ['a', 'Z', ' ', '"', '\\', '\n', '\t', 'é', '#', '%', '0', '{'];
    (0..rng.random_range(0..10)).map(|_| *CHARS.choose(rng).unwrap()).collect()
}

fn random_number<R: Rng>(rng: &mut R) -> f64 {
    match rng.random_range(0..4) {
        0 => rng.random_range(0..1000) as f64,
        1 => rng.random_range(0..10_000) as f64 / 100.0,
        2 => rng.random_range(0.0..1.0e6),
        _ => [0.3, 1.35, 0.1, 1e-7][rng.random_range(0..4)],
    }
}

fn random_date<R: Rng>(rng: &mut R) -> NaiveDate {
    date(rng.random_range(1990..2100), rng.random_range(1..=12), rng.random_range(1..=28))
}

fn random_pattern<R: Rng>(rng: &mut R) -> EventPattern {
    EventPattern {
        event_type: random_ident(rng),
        binders: (0..rng.random_range(0..4))
            .map(|_| Binder {
                attr: random_ident(rng),
                var: random_ident(rng),
            })
            .collect(),
    }
}

/// A syntactically well-formed expression; types are not checked.
pub fn random_expr<R: Rng>(rng: &mut R, depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.25) {
        return match rng.random_range(0..5) {
            0 => Expr::Lit(Value::Number(random_number(rng))),
            1 => Expr::Lit(Value::Str(random_string(rng))),
            2 => Expr::Lit(Value::Date(random_date(rng))),
            3 => Expr::Lit(Value::Bool(rng.random_bool(0.5))),
            _ => Expr::Var(random_ident(rng)),
        };
    }
    let d = depth - 1;
    match rng.random_range(0..8) {
        0..=2 => {
            const OPS: [BinOp; 12] = [
                BinOp::Add,
                BinOp::Sub,
                BinOp::Mul,
                BinOp::Div,
                BinOp::Eq,
                BinOp::Ne,
                BinOp::Lt,
                BinOp::Le,
                BinOp::Gt,
                BinOp::Ge,
                BinOp::And,
                BinOp::Or,
            ];
            Expr::binary(*OPS.choose(rng).unwrap(), random_expr(rng, d), random_expr(rng, d))
        }
        3 => Expr::Not(Box::new(random_expr(rng, d))),
        4 => Expr::Abs(Box::new(random_expr(rng, d))),
        5 => Expr::Let {
            name: random_ident(rng),
            value: Box::new(random_expr(rng, d)),
            body: Box::new(random_expr(rng, d)),
        },
        6 => Expr::Avg {
            source: random_ident(rng),
            column: random_ident(rng),
            filter: Box::new(random_expr(rng, d)),
        },
        _ => {
            if rng.random_bool(0.5) {
                Expr::Call {
                    name: random_ident(rng),
                    args: (0..rng.random_range(1..=3)).map(|_| random_expr(rng, d)).collect(),
                }
            } else {
                Expr::Exists {
                    pattern: random_pattern(rng),
                    filter: rng.random_bool(0.7).then(|| Box::new(random_expr(rng, d))),
                }
            }
        }
    }
}

pub fn random_contract<R: Rng>(rng: &mut R) -> Contract {
    let kinds = [ColumnKind::Number, ColumnKind::String, ColumnKind::Date];
    Contract {
        id: random_string(rng),
        version: rng.random_range(1..=50),
        effective_from: random_date(rng),
        sources: (0..rng.random_range(0..3))
            .map(|_| SourceDecl {
                name: random_ident(rng),
                columns: (0..rng.random_range(1..=4))
                    .map(|_| Column {
                        name: random_ident(rng),
                        kind: *kinds.choose(rng).unwrap(),
                    })
                    .collect(),
                location: random_string(rng),
            })
            .collect(),
        norms: (0..rng.random_range(0..4))
            .map(|_| NormDef {
                id: random_ident(rng),
                title: random_string(rng),
                trigger: random_pattern(rng),
                when: rng.random_bool(0.5).then(|| random_expr(rng, 4)),
                require: random_expr(rng, 5),
            })
            .collect(),
    }
}
