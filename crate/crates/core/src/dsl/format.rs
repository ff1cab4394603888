//! Canonical contract text.
//!
//! Layout: two-space indentation, one clause per line, sources before norms,
//! a blank line between top-level items. A `let` chain at the head of a
//! clause puts each binding on its own line:
//!
//! ```text
//!     require
//!       let h = avg(history.avg_price where tier == k)
//!       in abs(p - h) / h <= 0.3
//! ```
//!
//! Parentheses are emitted only where precedence requires them. A `let`
//! anywhere else is parenthesised because its body extends as far right as
//! possible.

use std::fmt::Write;

use super::ast::*;
use super::lexer::quote;
use crate::value::{format_date, format_number, Value};

pub fn format_contract(contract: &Contract) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "contract {} version {} effective {} {{",
        quote(&contract.id),
        contract.version,
        format_date(contract.effective_from)
    );
    let mut first = true;
    for s in &contract.sources {
        if !first {
            out.push('\n');
        }
        first = false;
        let cols: Vec<String> = s
            .columns
            .iter()
            .map(|c| format!("{}: {}", c.name, c.kind.keyword()))
            .collect();
        let _ = writeln!(
            out,
            "  source {}({}) from {}",
            s.name,
            cols.join(", "),
            quote(&s.location)
        );
    }
    for n in &contract.norms {
        if !first {
            out.push('\n');
        }
        first = false;
        let _ = writeln!(out, "  norm {} {} {{", n.id, quote(&n.title));
        let _ = writeln!(out, "    on {}", pattern(&n.trigger));
        if let Some(w) = &n.when {
            clause(&mut out, "when", w);
        }
        clause(&mut out, "require", &n.require);
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

fn clause(out: &mut String, keyword: &str, expr: &Expr) {
    if let Expr::Let { .. } = expr {
        let _ = writeln!(out, "    {keyword}");
        let mut cur = expr;
        let mut lead = "let";
        while let Expr::Let { name, value, body } = cur {
            let _ = writeln!(out, "      {lead} {name} = {}", format_expr(value));
            lead = "in let";
            cur = body;
        }
        let _ = writeln!(out, "      in {}", format_expr(cur));
    } else {
        let _ = writeln!(out, "    {keyword} {}", format_expr(expr));
    }
}

fn pattern(p: &EventPattern) -> String {
    let binders: Vec<String> = p
        .binders
        .iter()
        .map(|b| format!("{} = {}", b.attr, b.var))
        .collect();
    format!("event {}({})", p.event_type, binders.join(", "))
}

/// Single-line canonical text of an expression.
pub fn format_expr(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr, 0);
    out
}

const NOT_LEVEL: u8 = 3;
const ATOM_LEVEL: u8 = 7;

fn level(expr: &Expr) -> u8 {
    match expr {
        Expr::Binary { op, .. } => op.precedence(),
        Expr::Not(_) => NOT_LEVEL,
        _ => ATOM_LEVEL,
    }
}

/// Writes `expr` so that it parses back at a position requiring at least
/// precedence `min`.
fn write_expr(out: &mut String, expr: &Expr, min: u8) {
    let parens = level(expr) < min || (matches!(expr, Expr::Let { .. }) && min > 0);
    if parens {
        out.push('(');
    }
    match expr {
        Expr::Lit(v) => out.push_str(&literal(v)),
        Expr::Var(name) => out.push_str(name),
        Expr::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            // comparisons do not chain; everything else is left-associative
            let left_min = if op.is_comparison() { p + 1 } else { p };
            write_expr(out, lhs, left_min);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, rhs, p + 1);
        }
        Expr::Not(inner) => {
            out.push_str("not ");
            write_expr(out, inner, NOT_LEVEL + 1);
        }
        Expr::Abs(inner) => {
            out.push_str("abs(");
            write_expr(out, inner, 0);
            out.push(')');
        }
        Expr::Call { name, args } => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, 0);
            }
            out.push(')');
        }
        Expr::Let { name, value, body } => {
            let _ = write!(out, "let {name} = ");
            write_expr(out, value, 0);
            out.push_str(" in ");
            write_expr(out, body, 0);
        }
        Expr::Avg {
            source,
            column,
            filter,
        } => {
            let _ = write!(out, "avg({source}.{column} where ");
            write_expr(out, filter, 0);
            out.push(')');
        }
        Expr::Exists { pattern: p, filter } => {
            out.push_str("exists ");
            out.push_str(&pattern(p));
            if let Some(f) = filter {
                out.push_str(" where ");
                write_expr(out, f, 0);
            }
            out.push_str(" before trigger");
        }
    }
    if parens {
        out.push(')');
    }
}

fn literal(v: &Value) -> String {
    match v {
        Value::Number(n) => format_number(*n),
        Value::Str(s) => quote(s),
        Value::Date(d) => format_date(*d),
        Value::Bool(b) => b.to_string(),
    }
}
