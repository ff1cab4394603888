use std::collections::BTreeSet;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::value::Value;

/// Parses contract text into its syntax tree.
///
/// The parser is a single-token-lookahead recursive descent over the
/// contract grammar. Errors point at the first token that could not be
/// consumed and list every token that would have been accepted there.
pub fn parse_contract(text: &str) -> Result<Contract, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        expected: BTreeSet::new(),
    };
    let contract = p.contract()?;
    p.expect_eof()?;
    Ok(contract)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    expected: BTreeSet<String>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        self.expected.clear();
        t
    }

    fn error(&self) -> ParseError {
        let t = &self.tokens[self.pos];
        ParseError::new(
            t.line,
            t.col,
            self.expected.iter().cloned(),
            format!("unexpected {}", t.tok),
        )
    }

    fn at_keyword(&mut self, kw: &'static str) -> bool {
        if *self.peek() == Tok::Keyword(kw) {
            true
        } else {
            self.expected.insert(format!("`{kw}`"));
            false
        }
    }

    fn at_punct(&mut self, p: &'static str) -> bool {
        if *self.peek() == Tok::Punct(p) {
            true
        } else {
            self.expected.insert(format!("`{p}`"));
            false
        }
    }

    fn eat_keyword(&mut self, kw: &'static str) -> bool {
        let hit = self.at_keyword(kw);
        if hit {
            self.advance();
        }
        hit
    }

    fn eat_punct(&mut self, p: &'static str) -> bool {
        let hit = self.at_punct(p);
        if hit {
            self.advance();
        }
        hit
    }

    fn keyword(&mut self, kw: &'static str) -> PResult<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error())
        }
    }

    fn punct(&mut self, p: &'static str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error())
        }
    }

    fn ident(&mut self) -> PResult<String> {
        if let Tok::Ident(name) = self.peek() {
            let name = name.clone();
            self.advance();
            Ok(name)
        } else {
            self.expected.insert("identifier".into());
            Err(self.error())
        }
    }

    fn string(&mut self) -> PResult<String> {
        if let Tok::Str(s) = self.peek() {
            let s = s.clone();
            self.advance();
            Ok(s)
        } else {
            self.expected.insert("string".into());
            Err(self.error())
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.expected.insert("end of input".into());
            Err(self.error())
        }
    }

    fn contract(&mut self) -> PResult<Contract> {
        self.keyword("contract")?;
        let id = self.string()?;
        self.keyword("version")?;
        let version = match self.peek().clone() {
            Tok::Int(text) => match text.parse::<u32>() {
                Ok(v) if v >= 1 => {
                    self.advance();
                    v
                }
                _ => {
                    let t = &self.tokens[self.pos];
                    return Err(ParseError::new(
                        t.line,
                        t.col,
                        ["integer ≥ 1"],
                        format!("contract version must be a positive integer, found {text}"),
                    ));
                }
            },
            _ => {
                self.expected.insert("integer".into());
                return Err(self.error());
            }
        };
        self.keyword("effective")?;
        let effective_from = match self.peek() {
            Tok::Date(d) => {
                let d = *d;
                self.advance();
                d
            }
            _ => {
                self.expected.insert("date".into());
                return Err(self.error());
            }
        };
        self.punct("{")?;
        let mut sources = Vec::new();
        let mut norms = Vec::new();
        loop {
            if self.at_keyword("source") {
                sources.push(self.source()?);
            } else if self.at_keyword("norm") {
                norms.push(self.norm()?);
            } else if self.eat_punct("}") {
                break;
            } else {
                return Err(self.error());
            }
        }
        Ok(Contract {
            id,
            version,
            effective_from,
            sources,
            norms,
        })
    }

    fn source(&mut self) -> PResult<SourceDecl> {
        self.keyword("source")?;
        let name = self.ident()?;
        self.punct("(")?;
        let mut columns = vec![self.column()?];
        while self.eat_punct(",") {
            columns.push(self.column()?);
        }
        self.punct(")")?;
        self.keyword("from")?;
        let location = self.string()?;
        Ok(SourceDecl {
            name,
            columns,
            location,
        })
    }

    fn column(&mut self) -> PResult<Column> {
        let name = self.ident()?;
        self.punct(":")?;
        let kind = if self.eat_keyword("number") {
            ColumnKind::Number
        } else if self.eat_keyword("string") {
            ColumnKind::String
        } else if self.eat_keyword("date") {
            ColumnKind::Date
        } else {
            return Err(self.error());
        };
        Ok(Column { name, kind })
    }

    fn norm(&mut self) -> PResult<NormDef> {
        self.keyword("norm")?;
        let id = self.ident()?;
        let title = self.string()?;
        self.punct("{")?;
        self.keyword("on")?;
        let trigger = self.pattern()?;
        let when = if self.eat_keyword("when") {
            Some(self.expr()?)
        } else {
            None
        };
        self.keyword("require")?;
        let require = self.expr()?;
        self.punct("}")?;
        Ok(NormDef {
            id,
            title,
            trigger,
            when,
            require,
        })
    }

    fn pattern(&mut self) -> PResult<EventPattern> {
        self.keyword("event")?;
        let event_type = self.ident()?;
        self.punct("(")?;
        let mut binders = Vec::new();
        if !self.eat_punct(")") {
            loop {
                let attr = self.ident()?;
                self.punct("=")?;
                let var = self.ident()?;
                binders.push(Binder { attr, var });
                if self.eat_punct(")") {
                    break;
                }
                if !self.eat_punct(",") {
                    return Err(self.error());
                }
            }
        }
        Ok(EventPattern {
            event_type,
            binders,
        })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_keyword("or") {
            let rhs = self.and_expr()?;
            lhs = Expr::binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.eat_keyword("and") {
            let rhs = self.not_expr()?;
            lhs = Expr::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_keyword("not") {
            Ok(Expr::Not(Box::new(self.cmp()?)))
        } else {
            self.cmp()
        }
    }

    fn cmp(&mut self) -> PResult<Expr> {
        let lhs = self.sum()?;
        const OPS: [(&str, BinOp); 6] = [
            ("==", BinOp::Eq),
            ("!=", BinOp::Ne),
            ("<=", BinOp::Le),
            (">=", BinOp::Ge),
            ("<", BinOp::Lt),
            (">", BinOp::Gt),
        ];
        for (sym, op) in OPS {
            if self.eat_punct(sym) {
                let rhs = self.sum()?;
                return Ok(Expr::binary(op, lhs, rhs));
            }
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_punct("+") {
                BinOp::Add
            } else if self.eat_punct("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_punct("*") {
                BinOp::Mul
            } else if self.eat_punct("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.advance();
                return Ok(Expr::Lit(Value::Number(n)));
            }
            Tok::Int(text) => {
                self.advance();
                let n: f64 = text.parse().expect("digits parse as f64");
                return Ok(Expr::Lit(Value::Number(n)));
            }
            Tok::Str(s) => {
                self.advance();
                return Ok(Expr::Lit(Value::Str(s)));
            }
            Tok::Date(d) => {
                self.advance();
                return Ok(Expr::Lit(Value::Date(d)));
            }
            Tok::Ident(name) => {
                self.advance();
                if self.eat_punct("(") {
                    let mut args = vec![self.expr()?];
                    while self.eat_punct(",") {
                        args.push(self.expr()?);
                    }
                    self.punct(")")?;
                    return Ok(Expr::Call { name, args });
                }
                return Ok(Expr::Var(name));
            }
            _ => {}
        }
        if self.eat_keyword("true") {
            return Ok(Expr::Lit(Value::Bool(true)));
        }
        if self.eat_keyword("false") {
            return Ok(Expr::Lit(Value::Bool(false)));
        }
        if self.eat_keyword("abs") {
            self.punct("(")?;
            let inner = self.expr()?;
            self.punct(")")?;
            return Ok(Expr::Abs(Box::new(inner)));
        }
        if self.eat_keyword("let") {
            let name = self.ident()?;
            self.punct("=")?;
            let value = self.expr()?;
            self.keyword("in")?;
            let body = self.expr()?;
            return Ok(Expr::Let {
                name,
                value: Box::new(value),
                body: Box::new(body),
            });
        }
        if self.eat_keyword("avg") {
            self.punct("(")?;
            let source = self.ident()?;
            self.punct(".")?;
            let column = self.ident()?;
            self.keyword("where")?;
            let filter = self.expr()?;
            self.punct(")")?;
            return Ok(Expr::Avg {
                source,
                column,
                filter: Box::new(filter),
            });
        }
        if self.at_keyword("exists") {
            self.advance();
            let pattern = self.pattern()?;
            let filter = if self.eat_keyword("where") {
                Some(Box::new(self.expr()?))
            } else {
                None
            };
            self.keyword("before")?;
            self.keyword("trigger")?;
            return Ok(Expr::Exists { pattern, filter });
        }
        if self.eat_punct("(") {
            let inner = self.expr()?;
            self.punct(")")?;
            return Ok(inner);
        }
        for what in ["number", "string", "date", "identifier"] {
            self.expected.insert(what.into());
        }
        Err(self.error())
    }
}
