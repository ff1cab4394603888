use std::fmt;

use chrono::NaiveDate;

use crate::value::parse_date;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Compliant,
    /// Opens the next tier early, once, at the start of `skip_day`.
    TierSkip,
    /// A competitor goes bankrupt on `bankruptcy_day`; later prices are
    /// multiplied by `gouge_factor`.
    PriceGouge,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Compliant => "compliant",
            Scenario::TierSkip => "tier-skip",
            Scenario::PriceGouge => "price-gouge",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tier {
    pub capacity: u32,
    pub base_price: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub flight: String,
    pub route: String,
    pub departure_date: NaiveDate,
    /// First sale day; sales run daily until the day before departure.
    pub sale_start: NaiveDate,
    pub tiers: Vec<Tier>,
    pub daily_demand: u32,
    pub scenario: Scenario,
    pub gouge_factor: f64,
    /// Day index (0 = `sale_start`).
    pub bankruptcy_day: u32,
    pub skip_day: u32,
    pub history_years: u32,
    pub seed: u64,
    pub contract_version: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            flight: "LH100".into(),
            route: "TXL-MUC".into(),
            departure_date: NaiveDate::from_ymd_opt(2017, 11, 30).unwrap(),
            sale_start: NaiveDate::from_ymd_opt(2017, 10, 25).unwrap(),
            tiers: vec![
                Tier { capacity: 20, base_price: 89.0 },
                Tier { capacity: 20, base_price: 119.0 },
                Tier { capacity: 20, base_price: 149.0 },
            ],
            daily_demand: 6,
            scenario: Scenario::Compliant,
            gouge_factor: 1.35,
            bankruptcy_day: 3,
            skip_day: 2,
            history_years: 5,
            seed: 42,
            contract_version: 1,
        }
    }
}

impl SimConfig {
    /// Parses `key = value` lines; `#` starts a comment. Keys left out keep
    /// their [`Default`] value.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = SimConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let syntax = |message: String| ConfigError::Syntax { line, message };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| syntax(format!("expected `key = value`, found {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| syntax(format!("`{key}`: {value:?} is not {what}"));
            match key {
                "flight" => cfg.flight = value.to_string(),
                "route" => cfg.route = value.to_string(),
                "departure_date" => cfg.departure_date = parse_date(value).ok_or_else(|| bad("a date"))?,
                "sale_start" => cfg.sale_start = parse_date(value).ok_or_else(|| bad("a date"))?,
                "tiers" => cfg.tiers = parse_tiers(value).ok_or_else(|| bad("a list of capacity:price"))?,
                "daily_demand" => cfg.daily_demand = value.parse().map_err(|_| bad("an integer"))?,
                "scenario" => {
                    cfg.scenario = match value {
                        "compliant" => Scenario::Compliant,
                        "tier-skip" => Scenario::TierSkip,
                        "price-gouge" => Scenario::PriceGouge,
                        _ => return Err(bad("compliant, tier-skip or price-gouge")),
                    }
                }
                "gouge_factor" => cfg.gouge_factor = value.parse().map_err(|_| bad("a number"))?,
                "bankruptcy_day" => cfg.bankruptcy_day = value.parse().map_err(|_| bad("an integer"))?,
                "skip_day" => cfg.skip_day = value.parse().map_err(|_| bad("an integer"))?,
                "history_years" => cfg.history_years = value.parse().map_err(|_| bad("an integer"))?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad("a 64-bit unsigned integer"))?,
                "contract_version" => cfg.contract_version = value.parse().map_err(|_| bad("an integer"))?,
                _ => return Err(syntax(format!("unknown key `{key}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.tiers.is_empty() {
            return invalid("at least one tier is required");
        }
        if self.tiers.iter().any(|t| t.capacity == 0) {
            return invalid("tier capacities must be positive");
        }
        if self.tiers.iter().any(|t| !(t.base_price.is_finite() && t.base_price > 0.0)) {
            return invalid("tier prices must be positive");
        }
        if self.tiers.windows(2).any(|w| w[1].base_price <= w[0].base_price) {
            return invalid("tier prices must strictly increase");
        }
        if self.history_years < 1 {
            return invalid("history_years must be at least 1");
        }
        if self.daily_demand < 1 {
            return invalid("daily_demand must be at least 1");
        }
        if self.sale_start >= self.departure_date {
            return invalid("sale_start must be before departure_date");
        }
        if !(self.gouge_factor.is_finite() && self.gouge_factor > 0.0) {
            return invalid("gouge_factor must be positive");
        }
        if self.contract_version < 1 {
            return invalid("contract_version must be at least 1");
        }
        if self.flight.is_empty() || self.route.is_empty() {
            return invalid("flight and route must be non-empty");
        }
        Ok(())
    }
}

fn parse_tiers(value: &str) -> Option<Vec<Tier>> {
    value
        .split(',')
        .map(|item| {
            let (cap, price) = item.trim().split_once(':')?;
            Some(Tier {
                capacity: cap.trim().parse().ok()?,
                base_price: price.trim().parse().ok()?,
            })
        })
        .collect()
}
