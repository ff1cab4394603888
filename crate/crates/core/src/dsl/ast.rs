use chrono::NaiveDate;

use crate::value::{Kind, Value};

/// A compliance contract: the formal norms an automated system has agreed
/// to satisfy, plus the external tables those norms read.
#[derive(Debug, Clone, PartialEq)]
pub struct Contract {
    pub id: String,
    pub version: u32,
    pub effective_from: NaiveDate,
    pub sources: Vec<SourceDecl>,
    pub norms: Vec<NormDef>,
}

impl Contract {
    pub fn source(&self, name: &str) -> Option<&SourceDecl> {
        self.sources.iter().find(|s| s.name == name)
    }

    pub fn norm(&self, id: &str) -> Option<&NormDef> {
        self.norms.iter().find(|n| n.id == id)
    }
}

/// Declares an external reference table.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceDecl {
    pub name: String,
    pub columns: Vec<Column>,
    pub location: String,
}

impl SourceDecl {
    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnKind {
    Number,
    String,
    Date,
}

impl ColumnKind {
    pub fn kind(self) -> Kind {
        match self {
            ColumnKind::Number => Kind::Number,
            ColumnKind::String => Kind::String,
            ColumnKind::Date => Kind::Date,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            ColumnKind::Number => "number",
            ColumnKind::String => "string",
            ColumnKind::Date => "date",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormDef {
    pub id: String,
    pub title: String,
    pub trigger: EventPattern,
    pub when: Option<Expr>,
    pub require: Expr,
}

/// `event <type>(attr = var, ...)`
#[derive(Debug, Clone, PartialEq)]
pub struct EventPattern {
    pub event_type: String,
    pub binders: Vec<Binder>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binder {
    pub attr: String,
    pub var: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div)
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }

    /// Binding strength, loosest first: or, and, (not), comparison, sum, term.
    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Value),
    Var(String),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Not(Box<Expr>),
    Abs(Box<Expr>),
    /// Built-in predicate call; `same_day` is the only one.
    Call {
        name: String,
        args: Vec<Expr>,
    },
    Let {
        name: String,
        value: Box<Expr>,
        body: Box<Expr>,
    },
    /// `avg(source.column where filter)`
    Avg {
        source: String,
        column: String,
        filter: Box<Expr>,
    },
    /// `exists event <pattern> [where filter] before trigger`
    Exists {
        pattern: EventPattern,
        filter: Option<Box<Expr>>,
    },
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }
}

pub const BUILTIN_SAME_DAY: &str = "same_day";
