//! The compliance-contract language: syntax tree, parser, validator and
//! canonical formatter.
//!
//! A contract names the external tables it reads (`source`) and a list of
//! norms. Each norm fires on an event pattern, may be guarded by a `when`
//! clause, and states its requirement as a boolean expression:
//!
//! ```text
//! norm N1 "cheaper tiers first" {
//!   on event tier_opened(flight = f, tier = k)
//!   when k > 1
//!   require exists event tier_sold_out(flight = f2, tier = k2)
//!           where f2 == f and k2 == k - 1 before trigger
//! }
//! ```

mod ast;
mod format;
mod lexer;
mod parser;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

pub use ast::*;
pub use format::{format_contract, format_expr};
pub use parser::parse_contract;
pub use validate::{validate_contract, Diagnostic};

/// First offending token of a contract text. Lines and columns are 1-based;
/// columns count characters.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub expected: BTreeSet<String>,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new<I, S>(line: usize, col: usize, expected: I, message: String) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ParseError {
            line,
            col,
            expected: expected.into_iter().map(Into::into).collect(),
            message,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)?;
        if !self.expected.is_empty() {
            let list: Vec<&str> = self.expected.iter().map(String::as_str).collect();
            write!(f, "; expected one of: {}", list.join(", "))?;
        }
        Ok(())
    }
}

/// Position of one token of a contract text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSpan {
    pub line: usize,
    pub col: usize,
    /// Byte range in the text.
    pub range: std::ops::Range<usize>,
}

/// Every token of `text` in order, without the end-of-input marker.
pub fn token_spans(text: &str) -> Result<Vec<TokenSpan>, ParseError> {
    let mut tokens = lexer::tokenize(text)?;
    tokens.pop();
    Ok(tokens
        .into_iter()
        .map(|t| TokenSpan {
            line: t.line,
            col: t.col,
            range: t.span,
        })
        .collect())
}

/// The reference contract shipped with the crate: the two airline pricing
/// norms over tier ordering and historical price comparison.
pub const LUFTHANSA_CONTRACT: &str = include_str!("../../fixtures/lufthansa.contract");
