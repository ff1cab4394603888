//! Reference tables read by aggregate expressions (e.g. prices of previous
//! years). They live outside the hash chain; a contest report records their
//! content hash instead.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};

use sha2::{Digest, Sha256};

use super::Hash32;
use crate::dsl::{Column, ColumnKind, SourceDecl};
use crate::value::{format_date, format_number, parse_date, Value};

/// Loaded tables keyed by source name.
pub type Sources = BTreeMap<String, HistoryTable>;

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryTable {
    pub columns: Vec<Column>,
    /// Each row holds one value per column, in column order.
    pub rows: Vec<Vec<Value>>,
}

#[derive(Debug, thiserror::Error)]
pub enum HistoryError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl HistoryTable {
    pub fn new(columns: Vec<Column>) -> Self {
        HistoryTable {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn empty_for(decl: &SourceDecl) -> Self {
        HistoryTable::new(decl.columns.clone())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Appends a row after checking its arity and kinds.
    pub fn push_row(&mut self, row: Vec<Value>) -> Result<(), String> {
        if row.len() != self.columns.len() {
            return Err(format!(
                "row has {} values, table has {} columns",
                row.len(),
                self.columns.len()
            ));
        }
        for (v, c) in row.iter().zip(&self.columns) {
            if v.kind() != c.kind.kind() {
                return Err(format!(
                    "column `{}` expects {}, found {}",
                    c.name,
                    c.kind.keyword(),
                    v.kind()
                ));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    /// Canonical CSV text: header in column order, LF line endings.
    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        write_history(self, &mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn content_hash(&self) -> Hash32 {
        Sha256::digest(self.to_csv_bytes()).into()
    }
}

/// Hash binding a contest report to the reference data it used: SHA-256 of
/// the canonical CSV of every table, concatenated in source-name order.
/// For a single table this equals the SHA-256 of its canonical file.
pub fn sources_content_hash(sources: &Sources) -> Hash32 {
    let mut hasher = Sha256::new();
    for table in sources.values() {
        hasher.update(table.to_csv_bytes());
    }
    hasher.finalize().into()
}

pub fn write_history<W: Write>(table: &HistoryTable, w: W) -> Result<(), HistoryError> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wtr.write_record(table.columns.iter().map(|c| c.name.as_str()))?;
    for row in &table.rows {
        wtr.write_record(row.iter().map(|v| match v {
            Value::Number(n) => format_number(*n),
            Value::Str(s) => s.clone(),
            Value::Date(d) => format_date(*d),
            Value::Bool(b) => b.to_string(),
        }))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a CSV table for `decl`. The header must name every declared
/// column (in any order); extra columns are ignored.
pub fn read_history<R: Read>(decl: &SourceDecl, r: R) -> Result<HistoryTable, HistoryError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let headers = rdr.headers()?.clone();
    let mut positions = Vec::with_capacity(decl.columns.len());
    for c in &decl.columns {
        let pos = headers
            .iter()
            .position(|h| h == c.name)
            .ok_or_else(|| HistoryError::Malformed {
                line: 1,
                message: format!("header lacks declared column `{}`", c.name),
            })?;
        positions.push(pos);
    }
    let mut table = HistoryTable::empty_for(decl);
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let mut row = Vec::with_capacity(positions.len());
        for (c, &pos) in decl.columns.iter().zip(&positions) {
            let raw = record.get(pos).unwrap_or("");
            row.push(parse_cell(c.kind, raw).ok_or_else(|| HistoryError::Malformed {
                line,
                message: format!("column `{}`: {raw:?} is not a {}", c.name, c.kind.keyword()),
            })?);
        }
        table.rows.push(row);
    }
    Ok(table)
}

fn parse_cell(kind: ColumnKind, raw: &str) -> Option<Value> {
    match kind {
        ColumnKind::String => Some(Value::Str(raw.to_string())),
        ColumnKind::Date => parse_date(raw).map(Value::Date),
        ColumnKind::Number => {
            let plain = !raw.is_empty()
                && raw
                    .bytes()
                    .all(|b| b.is_ascii_digit() || b == b'.' || b == b'-');
            let n: f64 = raw.parse().ok().filter(|_| plain)?;
            n.is_finite().then_some(Value::Number(n))
        }
    }
}
