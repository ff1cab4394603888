//! Contestable automated decisions.
//!
//! An organisation states its obligations as a *compliance contract*
//! ([`dsl`]), records every decision and relevant world event in a
//! hash-chained [`trace`], and when a decision is contested runs the
//! [`contest`] procedure: verify the record, bind the contract and algorithm
//! versions in force at decision time, evaluate every applicable norm
//! ([`eval`]) and report a verdict with evidence. The same semantics drive an
//! online [`monitor`] that either logs violations or blocks them. The
//! [`sim`] module regenerates the airline tier-pricing case as traces.

pub mod cli;
pub mod contest;
pub mod dsl;
pub mod eval;
pub mod monitor;
pub mod sim;
pub mod trace;
pub mod value;

pub use value::{Kind, Timestamp, Value};
