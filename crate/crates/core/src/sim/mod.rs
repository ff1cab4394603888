//! Deterministic simulator of tier-based airline pricing.
//!
//! Each sale day starts at midnight with a `price_set` for the open tier,
//! followed by `daily_demand` `seat_sold` events at seeded times. When a
//! tier's capacity is exhausted a `tier_sold_out` is emitted and the next
//! tier opens and is priced at the same instant. Violating scenarios add one
//! planted deviation from that policy. All randomness comes from
//! [`SplitMix64`].

mod config;
mod rng;

pub use config::{ConfigError, Scenario, SimConfig, Tier};
pub use rng::SplitMix64;

use chrono::{Datelike, NaiveDate};

use crate::dsl::{Column, ColumnKind};
use crate::trace::{HistoryTable, ProposedEvent, Trace, TraceHeader};
use crate::value::{Timestamp, Value};

pub const ALGO_BEFORE_BANKRUPTCY: &str = "policy-v1";
pub const ALGO_AFTER_BANKRUPTCY: &str = "policy-v2";
pub const COMPETITOR: &str = "Air Berlin";

/// XORed into the seed for the history noise stream ("HIST").
const HISTORY_STREAM: u64 = 0x4849_5354;
const MAX_HISTORY_ATTEMPTS: u64 = 1000;
/// Gouged prices must clear the 30% band by more than rounding noise.
const GOUGE_MARGIN: f64 = 0.30 + 1e-9;
const MICROS_PER_DAY: u64 = 86_400_000_000;
/// Sales start one hour after the daily repricing.
const FIRST_SALE_MICROS: u64 = 3_600_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub trace: Trace,
    pub history: HistoryTable,
}

/// Column layout of generated history tables, matching the `history`
/// source of the shipped contract.
pub fn history_columns() -> Vec<Column> {
    [
        ("route", ColumnKind::String),
        ("sale_date", ColumnKind::Date),
        ("tier", ColumnKind::Number),
        ("avg_price", ColumnKind::Number),
    ]
    .into_iter()
    .map(|(name, kind)| Column {
        name: name.to_string(),
        kind,
    })
    .collect()
}

/// Trace and history for one configuration.
pub fn generate(cfg: &SimConfig) -> Result<SimOutput, ConfigError> {
    let trace = simulate(cfg)?;
    let history = history_for(cfg, &trace)?;
    Ok(SimOutput { trace, history })
}

/// The history table alone. Equal to `generate(cfg)?.history`.
pub fn gen_history(cfg: &SimConfig) -> Result<HistoryTable, ConfigError> {
    Ok(generate(cfg)?.history)
}

pub fn simulate(cfg: &SimConfig) -> Result<Trace, ConfigError> {
    cfg.validate()?;
    let mut sim = Run::new(cfg);
    sim.play()?;
    Ok(sim.trace)
}

struct Run<'a> {
    cfg: &'a SimConfig,
    trace: Trace,
    rng: SplitMix64,
    algo: &'static str,
    gouged: bool,
    tier: usize,
    remaining: u32,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a SimConfig) -> Self {
        Run {
            cfg,
            trace: Trace::new(TraceHeader {
                trace_id: format!("{}-{}-{}", cfg.flight, cfg.scenario, cfg.seed),
                created: Timestamp::at(cfg.sale_start, 0, 0),
                scope_key_attr: "flight".into(),
            }),
            rng: SplitMix64::new(cfg.seed),
            algo: ALGO_BEFORE_BANKRUPTCY,
            gouged: false,
            tier: 0,
            remaining: cfg.tiers[0].capacity,
        }
    }

    fn play(&mut self) -> Result<(), ConfigError> {
        let cfg = self.cfg;
        let days = (cfg.departure_date - cfg.sale_start).num_days() as u32;
        let mut skipped = false;
        let mut bankrupt = false;
        self.open_tier(Timestamp::at(cfg.sale_start, 0, 0), 0);
        'days: for day in 0..days {
            let date = cfg.sale_start + chrono::Days::new(day as u64);
            let midnight = Timestamp::at(date, 0, 0);
            if cfg.scenario == Scenario::PriceGouge && day == cfg.bankruptcy_day {
                self.algo = ALGO_AFTER_BANKRUPTCY;
                self.gouged = true;
                bankrupt = true;
                self.emit(
                    midnight,
                    "competitor_bankruptcy",
                    vec![
                        ("competitor", COMPETITOR.into()),
                        ("route", cfg.route.as_str().into()),
                    ],
                );
            }
            if cfg.scenario == Scenario::TierSkip && day == cfg.skip_day {
                if self.tier + 1 == cfg.tiers.len() {
                    return Err(ConfigError::Invalid(format!(
                        "tier-skip: no tier left to open early on day {day}"
                    )));
                }
                self.open_tier(midnight, self.tier + 1);
                skipped = true;
            }
            self.set_price(midnight, date);

            let mut offsets: Vec<u64> = (0..cfg.daily_demand)
                .map(|_| FIRST_SALE_MICROS + self.rng.below(MICROS_PER_DAY - FIRST_SALE_MICROS))
                .collect();
            offsets.sort_unstable();
            for off in offsets {
                let ts = Timestamp::from_micros(midnight.as_micros() + off as i64);
                let price = self.price();
                self.emit(
                    ts,
                    "seat_sold",
                    self.tier_attrs(vec![("price", price.into()), ("sale_date", date.into())]),
                );
                self.remaining -= 1;
                if self.remaining == 0 {
                    self.emit(ts, "tier_sold_out", self.tier_attrs(vec![]));
                    if self.tier + 1 == cfg.tiers.len() {
                        break 'days;
                    }
                    self.open_tier(ts, self.tier + 1);
                    self.set_price(ts, date);
                }
            }
        }
        if cfg.scenario == Scenario::TierSkip && !skipped {
            return Err(ConfigError::Invalid(format!(
                "tier-skip: sales ended before skip_day {}",
                cfg.skip_day
            )));
        }
        if cfg.scenario == Scenario::PriceGouge && !bankrupt {
            return Err(ConfigError::Invalid(format!(
                "price-gouge: sales ended before bankruptcy_day {}",
                cfg.bankruptcy_day
            )));
        }
        Ok(())
    }

    fn price(&self) -> f64 {
        let base = self.cfg.tiers[self.tier].base_price;
        if self.gouged {
            round_cents(base * self.cfg.gouge_factor)
        } else {
            base
        }
    }

    fn tier_attrs(&self, extra: Vec<(&'static str, Value)>) -> Vec<(&'static str, Value)> {
        let mut attrs: Vec<(&'static str, Value)> = vec![
            ("flight", self.cfg.flight.as_str().into()),
            ("route", self.cfg.route.as_str().into()),
            ("tier", Value::Number((self.tier + 1) as f64)),
        ];
        attrs.extend(extra);
        attrs
    }

    fn open_tier(&mut self, ts: Timestamp, tier: usize) {
        self.tier = tier;
        self.remaining = self.cfg.tiers[tier].capacity;
        let cap = Value::Number(self.remaining as f64);
        self.emit(ts, "tier_opened", self.tier_attrs(vec![("capacity", cap)]));
    }

    fn set_price(&mut self, ts: Timestamp, date: NaiveDate) {
        let price = self.price();
        self.emit(
            ts,
            "price_set",
            self.tier_attrs(vec![("price", price.into()), ("sale_date", date.into())]),
        );
    }

    fn emit(&mut self, ts: Timestamp, event_type: &str, attrs: Vec<(&str, Value)>) {
        let proposed = ProposedEvent::new(
            ts,
            event_type,
            attrs.into_iter().map(|(k, v)| (k.to_string(), v)),
            self.algo,
            self.cfg.contract_version,
        );
        self.trace
            .append(proposed)
            .expect("simulated events are ordered and finite");
    }
}

fn round_cents(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// One row per (year back, sale date, tier): rows for each of the previous
/// `history_years` years, on the month and day of every date in the sale
/// window. Sale dates on 29 February have no counterpart in common years
/// and get rows only for leap years.
///
/// For price-gouge runs the noise stream is re-drawn until at least one
/// gouged `price_set` deviates by more than 30% from its average.
fn history_for(cfg: &SimConfig, trace: &Trace) -> Result<HistoryTable, ConfigError> {
    let gouged: Vec<(f64, NaiveDate, f64)> = match cfg.scenario {
        Scenario::PriceGouge => trace
            .events
            .iter()
            .filter(|e| e.event_type == "price_set" && e.algo_version == ALGO_AFTER_BANKRUPTCY)
            .filter_map(|e| {
                Some((
                    e.attr("tier")?.as_number()?,
                    e.attr("sale_date")?.as_date()?,
                    e.attr("price")?.as_number()?,
                ))
            })
            .collect(),
        _ => Vec::new(),
    };
    for attempt in 0..MAX_HISTORY_ATTEMPTS {
        let table = history_draw(cfg, (cfg.seed ^ HISTORY_STREAM).wrapping_add(attempt));
        if cfg.scenario != Scenario::PriceGouge {
            return Ok(table);
        }
        let clears = gouged.iter().any(|&(tier, date, price)| {
            mean_price(&table, &cfg.route, tier, date)
                .is_some_and(|h| ((price - h) / h).abs() > GOUGE_MARGIN)
        });
        if clears {
            return Ok(table);
        }
    }
    Err(ConfigError::Invalid(format!(
        "price-gouge: factor {} never exceeds the 30% band against the generated history",
        cfg.gouge_factor
    )))
}

fn history_draw(cfg: &SimConfig, seed: u64) -> HistoryTable {
    let mut rng = SplitMix64::new(seed);
    let mut table = HistoryTable::new(history_columns());
    let days = (cfg.departure_date - cfg.sale_start).num_days() as u64;
    for back in (1..=cfg.history_years as i32).rev() {
        for day in 0..days {
            let sale = cfg.sale_start + chrono::Days::new(day);
            let Some(past) = sale.with_year(sale.year() - back) else {
                continue;
            };
            for (i, tier) in cfg.tiers.iter().enumerate() {
                let noise = rng.between(0.95, 1.05);
                table.rows.push(vec![
                    cfg.route.as_str().into(),
                    past.into(),
                    Value::Number((i + 1) as f64),
                    Value::Number(round_cents(tier.base_price * noise)),
                ]);
            }
        }
    }
    table
}

fn mean_price(table: &HistoryTable, route: &str, tier: f64, date: NaiveDate) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for row in &table.rows {
        let same = row[0] == Value::from(route)
            && row[2] == Value::Number(tier)
            && row[1]
                .as_date()
                .is_some_and(|d| d.month() == date.month() && d.day() == date.day());
        if same {
            sum += row[3].as_number()?;
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}
