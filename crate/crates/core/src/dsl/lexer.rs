use std::fmt;
use std::ops::Range;

use chrono::NaiveDate;

use super::ParseError;
use crate::value::parse_date;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Keyword(&'static str),
    Ident(String),
    Number(f64),
    /// Digit-only literal, kept as text so `version` can demand an integer.
    Int(String),
    Str(String),
    Date(NaiveDate),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Keyword(k) => write!(f, "`{k}`"),
            Tok::Ident(i) => write!(f, "identifier `{i}`"),
            Tok::Number(n) => write!(f, "number {n}"),
            Tok::Int(i) => write!(f, "integer {i}"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Date(d) => write!(f, "date {}", d.format("%Y-%m-%d")),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

pub(crate) const KEYWORDS: &[&str] = &[
    "contract", "version", "effective", "source", "from", "number", "string", "date", "norm",
    "on", "when", "require", "event", "let", "in", "avg", "where", "exists", "before", "trigger",
    "abs", "and", "or", "not", "true", "false",
];

const PUNCTS: &[&str] = &[
    "==", "!=", "<=", ">=", "<", ">", "=", "+", "-", "*", "/", "(", ")", "{", "}", ",", ":", ".",
];

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
    /// Byte range in the source.
    pub span: Range<usize>,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map_or(self.src.len(), |&(i, _)| i)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        chars: src.char_indices().peekable(),
        src,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        // whitespace and comments
        while let Some(c) = cur.peek() {
            if c.is_whitespace() {
                cur.bump();
            } else if c == '#' {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            } else {
                break;
            }
        }
        let (line, col) = (cur.line, cur.col);
        let start = cur.offset();
        let Some(c) = cur.peek() else {
            let (eof_line, eof_col) = end_position(src);
            out.push(Token {
                tok: Tok::Eof,
                line: eof_line,
                col: eof_col,
                span: src.len()..src.len(),
            });
            return Ok(out);
        };
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while cur
                .peek()
                .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
            {
                cur.bump();
            }
            let word = &src[start..cur.offset()];
            match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Keyword(k),
                None => Tok::Ident(word.to_string()),
            }
        } else if c.is_ascii_digit() {
            lex_number(&mut cur, line, col)?
        } else if c == '"' {
            lex_string(&mut cur, line, col)?
        } else {
            let rest = &src[cur.offset()..];
            match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
                Some(p) => {
                    for _ in 0..p.len() {
                        cur.bump();
                    }
                    Tok::Punct(p)
                }
                None => {
                    return Err(ParseError::new(
                        line,
                        col,
                        ["token"],
                        format!("unexpected character {c:?}"),
                    ))
                }
            }
        };
        let span = start..cur.offset();
        out.push(Token {
            tok,
            line,
            col,
            span,
        });
    }
}

/// End of input sits on the last line, not on the empty line after a final
/// newline.
fn end_position(src: &str) -> (usize, usize) {
    let body = src.strip_suffix('\n').unwrap_or(src);
    let body = body.strip_suffix('\r').unwrap_or(body);
    let line = body.matches('\n').count() + 1;
    let last = body.rsplit('\n').next().unwrap_or("");
    (line, last.chars().count() + 1)
}

fn lex_number(cur: &mut Cursor<'_>, line: usize, col: usize) -> Result<Tok, ParseError> {
    let start = cur.offset();
    while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
    }
    let int_end = cur.offset();
    // YYYY-MM-DD
    if int_end - start == 4 && cur.src[int_end..].starts_with('-') {
        let candidate = cur.src.get(start..start + 10).unwrap_or("");
        let shaped = candidate.len() == 10
            && candidate
                .bytes()
                .enumerate()
                .all(|(i, b)| if i == 4 || i == 7 { b == b'-' } else { b.is_ascii_digit() });
        let boundary = !cur.src[start + candidate.len()..]
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_');
        if shaped && boundary {
            for _ in 0..6 {
                cur.bump();
            }
            return parse_date(candidate).map(Tok::Date).ok_or_else(|| {
                ParseError::new(line, col, ["date"], format!("invalid date {candidate}"))
            });
        }
    }
    let mut is_int = true;
    if cur.peek() == Some('.')
        && cur.src[int_end + 1..]
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_digit())
    {
        is_int = false;
        cur.bump();
        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
        }
    }
    let text = &cur.src[start..cur.offset()];
    if cur
        .peek()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
    {
        return Err(ParseError::new(
            cur.line,
            cur.col,
            ["operator", "delimiter"],
            format!("identifier character directly after number {text}"),
        ));
    }
    if is_int {
        Ok(Tok::Int(text.to_string()))
    } else {
        let n: f64 = text.parse().expect("digits parse as f64");
        Ok(Tok::Number(n))
    }
}

fn lex_string(cur: &mut Cursor<'_>, line: usize, col: usize) -> Result<Tok, ParseError> {
    cur.bump();
    let mut s = String::new();
    loop {
        let (l, c) = (cur.line, cur.col);
        match cur.bump() {
            None | Some('\n') => {
                return Err(ParseError::new(
                    l,
                    c,
                    ["`\"`"],
                    format!("unterminated string starting at {line}:{col}"),
                ))
            }
            Some('"') => return Ok(Tok::Str(s)),
            Some('\\') => match cur.bump() {
                Some('"') => s.push('"'),
                Some('\\') => s.push('\\'),
                Some('n') => s.push('\n'),
                Some('t') => s.push('\t'),
                other => {
                    return Err(ParseError::new(
                        l,
                        c,
                        ["escape sequence"],
                        format!("invalid escape {other:?}"),
                    ))
                }
            },
            Some(ch) => s.push(ch),
        }
    }
}

/// Inverse of the string lexer.
pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
