//! Post-hoc examination of one recorded decision.

mod report;
mod state;

pub use report::{render_report, ContestReport, ReportError, Verdict};
pub use state::{reconstruct_state, ScopeState, WorldState};

use crate::dsl::Contract;
use crate::eval::{evaluate_event, EvalError, NormInstanceResult};
use crate::trace::{sources_content_hash, IntegrityError, SeqOutOfRange, Sources, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScopeMode {
    /// Events sharing the decision's scope-key value.
    #[default]
    ScopeKey,
    WholeTrace,
}

#[derive(Debug, Clone, Copy)]
pub struct ContestRequest<'a> {
    pub decision_seq: u64,
    pub contract: &'a Contract,
    pub trace: &'a Trace,
    pub sources: &'a Sources,
    pub scope_mode: ScopeMode,
    /// A damaged record found while loading the trace file, which the
    /// in-memory prefix cannot show.
    pub record_defect: Option<IntegrityError>,
}

impl<'a> ContestRequest<'a> {
    pub fn new(contract: &'a Contract, trace: &'a Trace, sources: &'a Sources, decision_seq: u64) -> Self {
        ContestRequest {
            decision_seq,
            contract,
            trace,
            sources,
            scope_mode: ScopeMode::ScopeKey,
            record_defect: None,
        }
    }

    pub fn scope(mut self, mode: ScopeMode) -> Self {
        self.scope_mode = mode;
        self
    }

    pub fn with_record_defect(mut self, defect: Option<IntegrityError>) -> Self {
        self.record_defect = defect;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ContestError {
    #[error("decision seq {decision_seq} was taken under contract version {recorded}, not {supplied}")]
    VersionMismatch {
        decision_seq: u64,
        recorded: u32,
        supplied: u32,
    },
    #[error(transparent)]
    SeqOutOfRange(#[from] SeqOutOfRange),
    #[error(transparent)]
    Eval(EvalError),
}

/// Runs the contest procedure.
///
/// A damaged trace is not an error: the report names the first defect and
/// the verdict is Inconclusive, with no instances evaluated.
pub fn contest_decision(req: ContestRequest<'_>) -> Result<ContestReport, ContestError> {
    let integrity = match (req.trace.verify_integrity().err(), req.record_defect) {
        (Some(a), Some(b)) => Some(if a.seq <= b.seq { a } else { b }),
        (a, b) => a.or(b),
    };
    if let Some(err) = integrity {
        return Ok(ContestReport {
            decision_seq: req.decision_seq,
            contract_id: req.contract.id.clone(),
            contract_version: req.contract.version,
            algo_version_at_decision: req.trace.get(req.decision_seq).map(|e| e.algo_version.clone()),
            trace_integrity: Some(err),
            scope_seqs: Vec::new(),
            results: Vec::new(),
            verdict: Verdict::Inconclusive,
            history_content_hash: sources_content_hash(req.sources),
        });
    }

    let decision = req.trace.get(req.decision_seq).ok_or(SeqOutOfRange {
        seq: req.decision_seq,
        len: req.trace.len(),
    })?;
    if decision.contract_version != req.contract.version {
        return Err(ContestError::VersionMismatch {
            decision_seq: decision.seq,
            recorded: decision.contract_version,
            supplied: req.contract.version,
        });
    }

    let scope_seqs = scope_seqs(req.trace, req.decision_seq, req.scope_mode);
    let mut results: Vec<NormInstanceResult> = Vec::new();
    for &seq in &scope_seqs {
        let prefix = &req.trace.events[..=seq as usize];
        results.extend(evaluate_event(req.contract, prefix, req.sources).map_err(ContestError::Eval)?);
    }
    Ok(ContestReport {
        decision_seq: decision.seq,
        contract_id: req.contract.id.clone(),
        contract_version: req.contract.version,
        algo_version_at_decision: Some(decision.algo_version.clone()),
        trace_integrity: None,
        verdict: Verdict::from_results(&results),
        scope_seqs,
        results,
        history_content_hash: sources_content_hash(req.sources),
    })
}

/// The seqs examined for a decision. In scope-key mode a decision event
/// without the key attribute falls back to the whole prefix.
pub fn scope_seqs(trace: &Trace, decision_seq: u64, mode: ScopeMode) -> Vec<u64> {
    let prefix = &trace.events[..=decision_seq as usize];
    let key = match mode {
        ScopeMode::WholeTrace => None,
        ScopeMode::ScopeKey => prefix
            .last()
            .and_then(|d| d.attr(&trace.header.scope_key_attr)),
    };
    prefix
        .iter()
        .filter(|e| match key {
            None => true,
            Some(k) => e.attr(&trace.header.scope_key_attr) == Some(k),
        })
        .map(|e| e.seq)
        .collect()
}
