//! Reference evaluation semantics for contract norms over a trace prefix.
//!
//! Evaluation is strict three-valued: any operand that cannot be determined
//! (missing reference data, division by zero, a runtime type clash) makes
//! the enclosing expression undetermined, including `and`/`or`. `exists`
//! ranges over events strictly before the trigger and cites the smallest
//! matching seq as its witness.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dsl::{format_expr, BinOp, Contract, EventPattern, Expr, NormDef, BUILTIN_SAME_DAY};
use crate::trace::{Event, IntegrityError, Sources, Trace};
use crate::value::Value;

pub type Bindings = BTreeMap<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Fulfilled,
    Violated,
    Undetermined,
    Inapplicable,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Outcome of one activation of one norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormInstanceResult {
    pub norm_id: String,
    pub trigger_seq: u64,
    pub bindings: Bindings,
    pub status: Status,
    /// The trigger seq plus, for fulfilled norms, each `exists` witness.
    pub evidence_seqs: Vec<u64>,
    /// Let-bound values by name; aggregates and comparison operands by
    /// their expression text.
    pub computed: BTreeMap<String, Value>,
    pub diagnostic: Option<String>,
}

/// Why an expression has no determined value.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct Undetermined(pub String);

impl Undetermined {
    fn new(reason: impl Into<String>) -> Self {
        Undetermined(reason.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("event `{event_type}` lacks attribute `{attr}` required by the trigger pattern")]
pub struct MissingAttribute {
    pub event_type: String,
    pub attr: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Integrity(#[from] IntegrityError),
    #[error("seq {seq}, norm {norm_id}: {source}")]
    MissingAttribute {
        seq: u64,
        norm_id: String,
        source: MissingAttribute,
    },
}

/// Binds the trigger pattern of `norm` against `event`.
///
/// `Ok(None)` when the event type differs. A matching type with a missing
/// binder attribute is an error: the trace and contract disagree.
pub fn match_trigger(norm: &NormDef, event: &Event) -> Result<Option<Bindings>, MissingAttribute> {
    match bind_pattern(&norm.trigger, event) {
        PatternMatch::Bound(b) => Ok(Some(b.into_iter().collect())),
        PatternMatch::WrongType => Ok(None),
        PatternMatch::Missing(attr) => Err(MissingAttribute {
            event_type: event.event_type.clone(),
            attr,
        }),
    }
}

enum PatternMatch {
    Bound(Vec<(String, Value)>),
    WrongType,
    Missing(String),
}

fn bind_pattern(pattern: &EventPattern, event: &Event) -> PatternMatch {
    if pattern.event_type != event.event_type {
        return PatternMatch::WrongType;
    }
    let mut bound = Vec::with_capacity(pattern.binders.len());
    for b in &pattern.binders {
        match event.attrs.get(&b.attr) {
            Some(v) => bound.push((b.var.clone(), v.clone())),
            None => return PatternMatch::Missing(b.attr.clone()),
        }
    }
    PatternMatch::Bound(bound)
}

/// Evaluates `expr` with the trigger being the last event of `prefix`.
pub fn eval_expr(
    expr: &Expr,
    bindings: &Bindings,
    prefix: &[Event],
    sources: &Sources,
) -> Result<Value, Undetermined> {
    Ctx::new(bindings, prefix, sources).eval(expr)
}

/// Evaluates one activation of `norm`. `prefix` must end with the event
/// that produced `bindings`.
pub fn evaluate_norm_instance(
    norm: &NormDef,
    bindings: Bindings,
    prefix: &[Event],
    sources: &Sources,
) -> NormInstanceResult {
    let trigger_seq = prefix.last().expect("prefix ends with the trigger").seq;
    let mut ctx = Ctx::new(&bindings, prefix, sources);
    let mut diagnostic = None;
    let status = match norm.when.as_ref().map(|w| ctx.eval_bool(w)) {
        Some(Err(u)) => {
            diagnostic = Some(format!("when clause undetermined: {u}"));
            Status::Undetermined
        }
        Some(Ok(false)) => Status::Inapplicable,
        Some(Ok(true)) | None => match ctx.eval_bool(&norm.require) {
            Ok(true) => Status::Fulfilled,
            Ok(false) => Status::Violated,
            Err(u) => {
                diagnostic = Some(format!("require clause undetermined: {u}"));
                Status::Undetermined
            }
        },
    };
    let mut evidence_seqs = vec![trigger_seq];
    if status == Status::Fulfilled {
        evidence_seqs.extend(&ctx.witnesses);
        evidence_seqs.sort_unstable();
        evidence_seqs.dedup();
    }
    NormInstanceResult {
        norm_id: norm.id.clone(),
        trigger_seq,
        bindings,
        status,
        evidence_seqs,
        computed: ctx.computed,
        diagnostic,
    }
}

/// All instances triggered by the last event of `prefix`, in norm
/// declaration order.
pub fn evaluate_event(
    contract: &Contract,
    prefix: &[Event],
    sources: &Sources,
) -> Result<Vec<NormInstanceResult>, EvalError> {
    let Some(event) = prefix.last() else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for norm in &contract.norms {
        let bindings = match_trigger(norm, event).map_err(|source| EvalError::MissingAttribute {
            seq: event.seq,
            norm_id: norm.id.clone(),
            source,
        })?;
        if let Some(b) = bindings {
            out.push(evaluate_norm_instance(norm, b, prefix, sources));
        }
    }
    Ok(out)
}

/// Batch evaluation of a whole trace, ordered by (trigger seq, norm
/// declaration index). This is the reference the online monitor must agree
/// with.
pub fn evaluate_trace(
    contract: &Contract,
    trace: &Trace,
    sources: &Sources,
) -> Result<Vec<NormInstanceResult>, EvalError> {
    trace.verify_integrity()?;
    let mut out = Vec::new();
    for end in 0..trace.events.len() {
        out.extend(evaluate_event(contract, &trace.events[..=end], sources)?);
    }
    Ok(out)
}

struct Ctx<'a> {
    prefix: &'a [Event],
    sources: &'a Sources,
    scope: Vec<(String, Value)>,
    witnesses: Vec<u64>,
    computed: BTreeMap<String, Value>,
    /// Off inside quantifier and aggregate filters, which run once per
    /// candidate and must not leak per-candidate values into the result.
    record: bool,
}

impl<'a> Ctx<'a> {
    fn new(bindings: &Bindings, prefix: &'a [Event], sources: &'a Sources) -> Self {
        Ctx {
            prefix,
            sources,
            scope: bindings
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            witnesses: Vec::new(),
            computed: BTreeMap::new(),
            record: true,
        }
    }

    fn lookup(&self, name: &str) -> Result<Value, Undetermined> {
        self.scope
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Undetermined::new(format!("unbound variable `{name}`")))
    }

    fn eval_bool(&mut self, expr: &Expr) -> Result<bool, Undetermined> {
        let v = self.eval(expr)?;
        v.as_bool().ok_or_else(|| {
            Undetermined::new(format!(
                "`{}` is {}, not boolean",
                format_expr(expr),
                v.kind()
            ))
        })
    }

    fn eval_number(&mut self, expr: &Expr) -> Result<f64, Undetermined> {
        let v = self.eval(expr)?;
        v.as_number().ok_or_else(|| {
            Undetermined::new(format!(
                "`{}` is {}, not number",
                format_expr(expr),
                v.kind()
            ))
        })
    }

    fn quiet<T>(&mut self, f: impl FnOnce(&mut Self) -> T) -> T {
        let saved = std::mem::replace(&mut self.record, false);
        let out = f(self);
        self.record = saved;
        out
    }

    fn eval(&mut self, expr: &Expr) -> Result<Value, Undetermined> {
        match expr {
            Expr::Lit(v) => Ok(v.clone()),
            Expr::Var(name) => self.lookup(name),
            Expr::Not(inner) => Ok(Value::Bool(!self.eval_bool(inner)?)),
            Expr::Abs(inner) => Ok(Value::Number(self.eval_number(inner)?.abs())),
            Expr::Binary { op, lhs, rhs } => self.binary(*op, lhs, rhs),
            Expr::Call { name, args } => {
                if name != BUILTIN_SAME_DAY || args.len() != 2 {
                    return Err(Undetermined::new(format!("unknown function `{name}`")));
                }
                let a = self.eval(&args[0])?;
                let b = self.eval(&args[1])?;
                match (a.as_date(), b.as_date()) {
                    (Some(a), Some(b)) => {
                        use chrono::Datelike;
                        Ok(Value::Bool(a.month() == b.month() && a.day() == b.day()))
                    }
                    _ => Err(Undetermined::new(format!(
                        "`same_day` needs dates, found {} and {}",
                        a.kind(),
                        b.kind()
                    ))),
                }
            }
            Expr::Let { name, value, body } => {
                let v = self.eval(value)?;
                if self.record {
                    self.computed.insert(name.clone(), v.clone());
                }
                self.scope.push((name.clone(), v));
                let out = self.eval(body);
                self.scope.pop();
                out
            }
            Expr::Avg {
                source,
                column,
                filter,
            } => {
                let mean = self.quiet(|c| c.average(source, column, filter))?;
                if self.record {
                    self.computed
                        .insert(format_expr(expr), Value::Number(mean));
                }
                Ok(Value::Number(mean))
            }
            Expr::Exists { pattern, filter } => {
                let witness = self.quiet(|c| c.find_witness(pattern, filter.as_deref()))?;
                if let (Some(seq), true) = (witness, self.record) {
                    self.witnesses.push(seq);
                }
                Ok(Value::Bool(witness.is_some()))
            }
        }
    }

    fn binary(&mut self, op: BinOp, lhs: &Expr, rhs: &Expr) -> Result<Value, Undetermined> {
        if op.is_arithmetic() {
            let a = self.eval_number(lhs)?;
            let b = self.eval_number(rhs)?;
            let r = match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(Undetermined::new("division by zero"));
                    }
                    a / b
                }
                _ => unreachable!(),
            };
            return if r.is_finite() {
                Ok(Value::Number(r))
            } else {
                Err(Undetermined::new("numeric overflow"))
            };
        }
        if matches!(op, BinOp::And | BinOp::Or) {
            // strict: both sides are always evaluated
            let a = self.eval_bool(lhs);
            let b = self.eval_bool(rhs);
            let (a, b) = (a?, b?);
            return Ok(Value::Bool(if op == BinOp::And { a && b } else { a || b }));
        }
        let a = self.eval(lhs);
        let b = self.eval(rhs);
        for (side, v) in [(lhs, &a), (rhs, &b)] {
            if let (Ok(v), true) = (v, self.record) {
                if !matches!(side, Expr::Lit(_) | Expr::Var(_)) {
                    self.computed.insert(format_expr(side), v.clone());
                }
            }
        }
        let (a, b) = (a?, b?);
        let sym = op.symbol();
        let result = match op {
            BinOp::Eq | BinOp::Ne => {
                if a.kind() != b.kind() {
                    return Err(Undetermined::new(format!(
                        "cannot compare {} with {} using `{sym}`",
                        a.kind(),
                        b.kind()
                    )));
                }
                (a == b) == (op == BinOp::Eq)
            }
            _ => {
                let ord = a.compare(&b).ok_or_else(|| {
                    Undetermined::new(format!(
                        "cannot order {} and {} using `{sym}`",
                        a.kind(),
                        b.kind()
                    ))
                })?;
                match op {
                    BinOp::Lt => ord.is_lt(),
                    BinOp::Le => ord.is_le(),
                    BinOp::Gt => ord.is_gt(),
                    BinOp::Ge => ord.is_ge(),
                    _ => unreachable!(),
                }
            }
        };
        Ok(Value::Bool(result))
    }

    fn average(&mut self, source: &str, column: &str, filter: &Expr) -> Result<f64, Undetermined> {
        let sources = self.sources;
        let table = sources
            .get(source)
            .ok_or_else(|| Undetermined::new(format!("source `{source}` is not loaded")))?;
        let idx = table
            .column_index(column)
            .ok_or_else(|| Undetermined::new(format!("source `{source}` has no column `{column}`")))?;
        let mut sum = 0.0;
        let mut count = 0usize;
        for row in &table.rows {
            let depth = self.scope.len();
            for (c, v) in table.columns.iter().zip(row) {
                self.scope.push((c.name.clone(), v.clone()));
            }
            let keep = self.eval_bool(filter);
            self.scope.truncate(depth);
            if keep? {
                let n = row[idx].as_number().ok_or_else(|| {
                    Undetermined::new(format!("`{source}.{column}` holds a non-number"))
                })?;
                sum += n;
                count += 1;
            }
        }
        if count == 0 {
            return Err(Undetermined::new("empty aggregate"));
        }
        let mean = sum / count as f64;
        if mean.is_finite() {
            Ok(mean)
        } else {
            Err(Undetermined::new("numeric overflow"))
        }
    }

    fn find_witness(
        &mut self,
        pattern: &EventPattern,
        filter: Option<&Expr>,
    ) -> Result<Option<u64>, Undetermined> {
        let prefix = self.prefix;
        let before = &prefix[..prefix.len().saturating_sub(1)];
        let mut witness = None;
        for candidate in before {
            let PatternMatch::Bound(bound) = bind_pattern(pattern, candidate) else {
                continue;
            };
            let hit = match filter {
                None => true,
                Some(f) => {
                    let depth = self.scope.len();
                    self.scope.extend(bound);
                    let hit = self.eval_bool(f);
                    self.scope.truncate(depth);
                    hit?
                }
            };
            if hit && witness.is_none() {
                witness = Some(candidate.seq);
            }
        }
        Ok(witness)
    }
}
