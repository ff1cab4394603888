//! Runs a regimenting monitor in front of a pricing policy that tries to
//! open tier 2 early and to overcharge, and shows which proposals are
//! refused.
//!
//! Usage: `cargo run --example monitor_regiment`

use chrono::NaiveDate;

use contestable::dsl::{parse_contract, LUFTHANSA_CONTRACT};
use contestable::monitor::{Decision, MonitorMode, MonitorState};
use contestable::sim::{generate, SimConfig};
use contestable::trace::{ProposedEvent, Sources, TraceHeader};
use contestable::{Timestamp, Value};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let contract = parse_contract(LUFTHANSA_CONTRACT)?;
    let sim = generate(&SimConfig::default())?;
    let sources = Sources::from([("history".to_string(), sim.history)]);
    let day = NaiveDate::from_ymd_opt(2017, 10, 25).ok_or("bad date")?;
    let mut monitor = MonitorState::new(
        contract,
        sources,
        MonitorMode::Regiment,
        TraceHeader {
            trace_id: "regiment-demo".into(),
            created: Timestamp::at(day, 0, 0),
            scope_key_attr: "flight".into(),
        },
    );

    let attrs = |tier: f64, extra: Vec<(&str, Value)>| {
        let mut a = vec![
            ("flight".to_string(), Value::from("LH100")),
            ("route".to_string(), Value::from("TXL-MUC")),
            ("tier".to_string(), Value::Number(tier)),
        ];
        a.extend(extra.into_iter().map(|(k, v)| (k.to_string(), v)));
        a
    };
    let price = |tier: f64, p: f64| attrs(tier, vec![("price", p.into()), ("sale_date", day.into())]);
    let plan = [
        ("tier_opened", attrs(1.0, vec![("capacity", 1.into())])),
        ("price_set", price(1.0, 89.0)),
        ("tier_opened", attrs(2.0, vec![("capacity", 1.into())])),
        ("price_set", price(1.0, 129.0)),
        ("seat_sold", attrs(1.0, vec![])),
        ("tier_sold_out", attrs(1.0, vec![])),
        ("tier_opened", attrs(2.0, vec![("capacity", 1.into())])),
        ("price_set", price(2.0, 119.0)),
    ];
    for (i, (ty, a)) in plan.into_iter().enumerate() {
        let ts = Timestamp::at(day, 600 * (i as i64 + 1), 0);
        match monitor.step_regiment(ProposedEvent::new(ts, ty, a, "policy-v1", 1))? {
            Decision::Allow { event, .. } => println!("allow  seq {:>2} {}", event.seq, event.event_type),
            Decision::Block(v) => {
                let norms: Vec<&str> = v.iter().map(|r| r.norm_id.as_str()).collect();
                println!("block         {ty} (violates {})", norms.join(", "));
            }
        }
    }
    println!("committed {} event(s)", monitor.trace().len());
    Ok(())
}
