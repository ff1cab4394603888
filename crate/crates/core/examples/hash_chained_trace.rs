//! Builds a small hash-chained trace, writes it out, tampers with one byte
//! and shows how the damage is located.
//!
//! Usage: `cargo run --example hash_chained_trace`

use chrono::NaiveDate;

use contestable::trace::{read_trace_forensic, write_trace, ProposedEvent, Trace, TraceHeader};
use contestable::{Timestamp, Value};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let day = NaiveDate::from_ymd_opt(2017, 10, 25).ok_or("bad date")?;
    let mut trace = Trace::new(TraceHeader {
        trace_id: "demo".into(),
        created: Timestamp::at(day, 0, 0),
        scope_key_attr: "flight".into(),
    });
    let flight = || ("flight".to_string(), Value::from("LH100"));
    let tier = |k: f64| ("tier".to_string(), Value::Number(k));
    let events = [
        ("tier_opened", vec![flight(), tier(1.0), ("capacity".into(), 2.into())]),
        ("price_set", vec![flight(), tier(1.0), ("price".into(), 89.0.into())]),
        ("seat_sold", vec![flight(), tier(1.0)]),
        ("seat_sold", vec![flight(), tier(1.0)]),
        ("tier_sold_out", vec![flight(), tier(1.0)]),
    ];
    for (i, (ty, attrs)) in events.into_iter().enumerate() {
        let ts = Timestamp::at(day, 3600 * (i as i64 + 1), 0);
        let e = trace.append(ProposedEvent::new(ts, ty, attrs, "policy-v1", 1))?;
        println!("{:>2} {:<14} {}", e.seq, e.event_type, hex::encode(e.hash));
    }
    trace.verify_integrity()?;

    let mut bytes = Vec::new();
    write_trace(&trace, &mut bytes)?;
    println!("\n{}", String::from_utf8_lossy(&bytes));

    let target = bytes.iter().rposition(|&b| b == b'9').ok_or("no digit to change")?;
    bytes[target] = b'8';
    let damaged = read_trace_forensic(&bytes)?;
    match damaged.first_integrity_error() {
        Some(err) => println!("after changing byte {target}: {err}"),
        None => println!("after changing byte {target}: no damage found"),
    }
    Ok(())
}
