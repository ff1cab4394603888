use std::collections::HashSet;
use std::fmt;

use super::ast::*;
use crate::value::Kind;

/// A problem found in an otherwise parseable contract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// The norm the problem belongs to; `None` for contract-level problems.
    pub norm_id: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.norm_id {
            Some(id) => write!(f, "norm {id}: {}", self.message),
            None => write!(f, "contract: {}", self.message),
        }
    }
}

/// Checks the contract invariants, name resolution and typing. An empty
/// result means the contract can be evaluated.
///
/// Event attributes are dynamically typed, so variables bound by event
/// patterns have unknown kind and only fail at evaluation time.
pub fn validate_contract(contract: &Contract) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let contract_diag = |message: String| Diagnostic {
        norm_id: None,
        message,
    };
    if contract.version < 1 {
        out.push(contract_diag(format!(
            "version must be at least 1, found {}",
            contract.version
        )));
    }

    let mut seen = HashSet::new();
    for source in &contract.sources {
        if !seen.insert(source.name.as_str()) {
            out.push(contract_diag(format!(
                "duplicate source name `{}`",
                source.name
            )));
        }
        let mut cols = HashSet::new();
        for column in &source.columns {
            if !cols.insert(column.name.as_str()) {
                out.push(contract_diag(format!(
                    "duplicate column `{}` in source `{}`",
                    column.name, source.name
                )));
            }
        }
    }

    let mut seen = HashSet::new();
    for norm in &contract.norms {
        if !seen.insert(norm.id.as_str()) {
            out.push(contract_diag(format!("duplicate norm id `{}`", norm.id)));
        }
        let mut checker = Checker {
            contract,
            norm_id: &norm.id,
            scope: Vec::new(),
            out: &mut out,
        };
        checker.pattern(&norm.trigger);
        if let Some(when) = &norm.when {
            checker.expect_bool(when, "when clause");
        }
        checker.expect_bool(&norm.require, "require clause");
    }
    out
}

struct Checker<'a> {
    contract: &'a Contract,
    norm_id: &'a str,
    /// Innermost binding last. `None` kind means dynamically typed.
    scope: Vec<(String, Option<Kind>)>,
    out: &'a mut Vec<Diagnostic>,
}

impl Checker<'_> {
    fn report(&mut self, message: String) {
        self.out.push(Diagnostic {
            norm_id: Some(self.norm_id.to_string()),
            message,
        });
    }

    /// Checks a pattern and pushes its variables; returns how many were pushed.
    fn pattern(&mut self, pattern: &EventPattern) -> usize {
        let mut attrs = HashSet::new();
        let mut vars = HashSet::new();
        for b in &pattern.binders {
            if !attrs.insert(b.attr.as_str()) {
                self.report(format!(
                    "attribute `{}` bound twice in pattern `{}`",
                    b.attr, pattern.event_type
                ));
            }
            if !vars.insert(b.var.as_str()) {
                self.report(format!(
                    "variable `{}` bound twice in pattern `{}`",
                    b.var, pattern.event_type
                ));
            }
            self.scope.push((b.var.clone(), None));
        }
        pattern.binders.len()
    }

    fn lookup(&self, name: &str) -> Option<Option<Kind>> {
        self.scope
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, k)| *k)
    }

    fn expect_bool(&mut self, expr: &Expr, what: &str) {
        if let Some(kind) = self.infer(expr) {
            if kind != Kind::Boolean {
                self.report(format!("{what} must be boolean, found {kind}"));
            }
        }
    }

    fn expect_kind(&mut self, expr: &Expr, want: Kind, what: &str) {
        if let Some(kind) = self.infer(expr) {
            if kind != want {
                self.report(format!("{what} must be {want}, found {kind}"));
            }
        }
    }

    /// Infers the kind of `expr`, reporting problems on the way. `None`
    /// means unknown until evaluation (or already reported).
    fn infer(&mut self, expr: &Expr) -> Option<Kind> {
        match expr {
            Expr::Lit(v) => Some(v.kind()),
            Expr::Var(name) => match self.lookup(name) {
                Some(kind) => kind,
                None => {
                    self.report(format!("unbound variable `{name}`"));
                    None
                }
            },
            Expr::Not(inner) => {
                self.expect_bool(inner, "operand of `not`");
                Some(Kind::Boolean)
            }
            Expr::Abs(inner) => {
                self.expect_kind(inner, Kind::Number, "argument of `abs`");
                Some(Kind::Number)
            }
            Expr::Binary { op, lhs, rhs } => self.binary(*op, lhs, rhs),
            Expr::Call { name, args } => {
                if name != BUILTIN_SAME_DAY {
                    self.report(format!("unknown function `{name}`"));
                    for a in args {
                        self.infer(a);
                    }
                    return None;
                }
                if args.len() != 2 {
                    self.report(format!(
                        "`{name}` takes 2 arguments, found {}",
                        args.len()
                    ));
                }
                for a in args {
                    self.expect_kind(a, Kind::Date, "argument of `same_day`");
                }
                Some(Kind::Boolean)
            }
            Expr::Let { name, value, body } => {
                let kind = self.infer(value);
                self.scope.push((name.clone(), kind));
                let body_kind = self.infer(body);
                self.scope.pop();
                body_kind
            }
            Expr::Avg {
                source,
                column,
                filter,
            } => {
                let Some(decl) = self.contract.source(source) else {
                    self.report(format!("unknown source `{source}`"));
                    return Some(Kind::Number);
                };
                match decl.column(column) {
                    None => {
                        self.report(format!("source `{source}` has no column `{column}`"))
                    }
                    Some(c) if c.kind != ColumnKind::Number => self.report(format!(
                        "`avg` needs a number column, `{source}.{column}` is {}",
                        c.kind.keyword()
                    )),
                    Some(_) => {}
                }
                let pushed = decl.columns.len();
                for c in &decl.columns {
                    self.scope.push((c.name.clone(), Some(c.kind.kind())));
                }
                self.expect_bool(filter, "aggregate filter");
                self.scope.truncate(self.scope.len() - pushed);
                Some(Kind::Number)
            }
            Expr::Exists { pattern, filter } => {
                let pushed = self.pattern(pattern);
                if let Some(f) = filter {
                    self.expect_bool(f, "exists filter");
                }
                self.scope.truncate(self.scope.len() - pushed);
                Some(Kind::Boolean)
            }
        }
    }

    fn binary(&mut self, op: BinOp, lhs: &Expr, rhs: &Expr) -> Option<Kind> {
        let sym = op.symbol();
        if op.is_arithmetic() {
            self.expect_kind(lhs, Kind::Number, &format!("left operand of `{sym}`"));
            self.expect_kind(rhs, Kind::Number, &format!("right operand of `{sym}`"));
            return Some(Kind::Number);
        }
        if matches!(op, BinOp::And | BinOp::Or) {
            self.expect_bool(lhs, &format!("left operand of `{sym}`"));
            self.expect_bool(rhs, &format!("right operand of `{sym}`"));
            return Some(Kind::Boolean);
        }
        let l = self.infer(lhs);
        let r = self.infer(rhs);
        if let (Some(l), Some(r)) = (l, r) {
            if l != r {
                self.report(format!("cannot compare {l} with {r} using `{sym}`"));
            }
        }
        let ordered = !matches!(op, BinOp::Eq | BinOp::Ne);
        for k in [l, r].into_iter().flatten() {
            if ordered && k == Kind::Boolean {
                self.report(format!("`{sym}` is not defined on boolean values"));
                break;
            }
        }
        Some(Kind::Boolean)
    }
}
