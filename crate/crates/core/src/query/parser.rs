//! Recursive-descent parser for the filter language.
//!
//! ```text
//! filter   = [ disjunct ] EOF
//! disjunct = conjunct { "OR" conjunct }
//! conjunct = unit { "AND" unit }
//! unit     = "(" disjunct ")" | ident cmp value | ident "IN" interval
//! interval = "[" number "," number "]"
//! cmp      = "=" | "<" | ">" | "<=" | ">=" | "≤" | "≥"
//! value    = number | ident | string
//! ```
//!
//! Keywords are case-insensitive. `OR` is only accepted between ranges of
//! the same property, where a range is `p in [a, b]` or `p >= a AND p <= b`.
//! Everything else must be a conjunction.

use std::fmt;

use super::ast::{Atom, CategoricalField, CmpOp, FilterExpr, Interval};
use crate::error::Error;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64, String),
    Str(String),
    Op(CmpOp),
    And,
    Or,
    In,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(_, s) => format!("number `{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Op(op) => format!("`{}`", op.symbol()),
            Tok::And => "`AND`".into(),
            Tok::Or => "`OR`".into(),
            Tok::In => "`IN`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn err(pos: Pos, message: impl Into<String>, expected: &[&str]) -> ParseError {
    ParseError {
        line: pos.line,
        column: pos.column,
        message: message.into(),
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '=' => Some(Tok::Op(CmpOp::Eq)),
            '≤' => Some(Tok::Op(CmpOp::Le)),
            '≥' => Some(Tok::Op(CmpOp::Ge)),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, pos));
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '<' || c == '>' {
            let with_eq = chars.get(i + 1) == Some(&'=');
            let op = match (c, with_eq) {
                ('<', false) => CmpOp::Lt,
                ('<', true) => CmpOp::Le,
                ('>', false) => CmpOp::Gt,
                _ => CmpOp::Ge,
            };
            out.push((Tok::Op(op), pos));
            advance(&mut i, &mut line, &mut col, c);
            if with_eq {
                advance(&mut i, &mut line, &mut col, '=');
            }
            continue;
        }
        if c == '"' {
            advance(&mut i, &mut line, &mut col, c);
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(err(pos, "unterminated string", &["`\"`"])),
                    Some('"') => {
                        advance(&mut i, &mut line, &mut col, '"');
                        break;
                    }
                    Some('\\') => {
                        let esc = chars.get(i + 1).copied();
                        let ch = match esc {
                            Some('"') => '"',
                            Some('\\') => '\\',
                            Some('n') => '\n',
                            _ => {
                                return Err(err(
                                    Pos { line, column: col },
                                    "invalid escape sequence",
                                    &["`\\\"`", "`\\\\`", "`\\n`"],
                                ))
                            }
                        };
                        advance(&mut i, &mut line, &mut col, '\\');
                        advance(&mut i, &mut line, &mut col, esc.unwrap());
                        s.push(ch);
                    }
                    Some(&ch) => {
                        advance(&mut i, &mut line, &mut col, ch);
                        s.push(ch);
                    }
                }
            }
            out.push((Tok::Str(s), pos));
            continue;
        }
        if c.is_ascii_digit()
            || ((c == '-' || c == '+' || c == '.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit() || *d == '.'))
        {
            let start = i;
            let mut j = i + 1;
            while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                j += 1;
            }
            if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                let mut k = j + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                    j = k;
                }
            }
            let text: String = chars[start..j].iter().collect();
            let value: f64 = text
                .parse()
                .map_err(|_| err(pos, format!("malformed number `{text}`"), &["number"]))?;
            for &ch in &chars[start..j] {
                advance(&mut i, &mut line, &mut col, ch);
            }
            out.push((Tok::Number(value, text), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            let mut j = i + 1;
            while j < chars.len() && (chars[j].is_alphanumeric() || matches!(chars[j], '_' | '.' | '-')) {
                j += 1;
            }
            let text: String = chars[start..j].iter().collect();
            for &ch in &chars[start..j] {
                advance(&mut i, &mut line, &mut col, ch);
            }
            let tok = match text.to_ascii_lowercase().as_str() {
                "and" => Tok::And,
                "or" => Tok::Or,
                "in" => Tok::In,
                _ => Tok::Ident(text),
            };
            out.push((tok, pos));
            continue;
        }
        return Err(err(pos, format!("unexpected character `{c}`"), &[]));
    }
    out.push((Tok::Eof, Pos { line, column: col }));
    Ok(out)
}

/// Parse tree before lowering to [`FilterExpr`].
enum Node {
    Atom(Atom, Pos),
    And(Vec<Node>),
    Or(Vec<Node>, Pos),
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        err(self.pos(), format!("unexpected {}", self.peek().describe()), expected)
    }

    fn disjunct(&mut self) -> Result<Node, ParseError> {
        let first = self.conjunct()?;
        if *self.peek() != Tok::Or {
            return Ok(first);
        }
        let or_pos = self.pos();
        let mut alts = vec![first];
        while *self.peek() == Tok::Or {
            self.bump();
            alts.push(self.conjunct()?);
        }
        Ok(Node::Or(alts, or_pos))
    }

    fn conjunct(&mut self) -> Result<Node, ParseError> {
        let first = self.unit()?;
        if *self.peek() != Tok::And {
            return Ok(first);
        }
        let mut parts = vec![first];
        while *self.peek() == Tok::And {
            self.bump();
            parts.push(self.unit()?);
        }
        Ok(Node::And(parts))
    }

    fn unit(&mut self) -> Result<Node, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let inner = self.disjunct()?;
                match self.peek() {
                    Tok::RParen => {
                        self.bump();
                        Ok(inner)
                    }
                    _ => Err(self.unexpected(&["`AND`", "`OR`", "`)`"])),
                }
            }
            Tok::Ident(name) => {
                let pos = self.pos();
                self.bump();
                self.condition(name, pos)
            }
            _ => Err(self.unexpected(&["identifier", "`(`"])),
        }
    }

    fn condition(&mut self, name: String, pos: Pos) -> Result<Node, ParseError> {
        let field = CategoricalField::from_ident(&name);
        match self.peek().clone() {
            Tok::In if field.is_none() => {
                self.bump();
                let interval = self.interval()?;
                Ok(Node::Atom(
                    Atom::RangeUnion {
                        key: name,
                        ranges: vec![interval],
                    },
                    pos,
                ))
            }
            Tok::Op(op) => {
                self.bump();
                let value_pos = self.pos();
                let value = self.bump().0;
                match (field, value) {
                    (Some(field), Tok::Ident(v) | Tok::Str(v) | Tok::Number(_, v)) if op == CmpOp::Eq => {
                        Ok(Node::Atom(Atom::CategoricalEq { field, value: v }, pos))
                    }
                    (Some(field), Tok::Ident(_) | Tok::Str(_) | Tok::Number(..)) => {
                        Err(err(pos, format!("`{}` only supports `=`", field.name()), &["`=`"]))
                    }
                    (Some(_), other) => Err(err(
                        value_pos,
                        format!("unexpected {}", other.describe()),
                        &["identifier", "string"],
                    )),
                    (None, Tok::Number(threshold, _)) => Ok(Node::Atom(
                        Atom::Comparison {
                            key: name,
                            op,
                            threshold,
                        },
                        pos,
                    )),
                    (None, other) => Err(err(value_pos, format!("unexpected {}", other.describe()), &["number"])),
                }
            }
            _ if field.is_some() => Err(self.unexpected(&["`=`"])),
            _ => Err(self.unexpected(&["comparison operator", "`IN`"])),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        match self.peek().clone() {
            Tok::Number(v, _) => {
                self.bump();
                Ok(v)
            }
            _ => Err(self.unexpected(&["number"])),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[&tok.describe()]))
        }
    }

    fn interval(&mut self) -> Result<Interval, ParseError> {
        let pos = self.pos();
        self.expect(Tok::LBracket)?;
        let lo = self.number()?;
        self.expect(Tok::Comma)?;
        let hi = self.number()?;
        self.expect(Tok::RBracket)?;
        if lo > hi {
            return Err(err(pos, format!("empty interval [{lo}, {hi}]"), &[]));
        }
        Ok(Interval { lo, hi })
    }
}

fn flatten(node: Node, out: &mut Vec<(Atom, Pos)>) -> Result<(), ParseError> {
    match node {
        Node::Atom(a, p) => out.push((a, p)),
        Node::And(parts) => {
            for p in parts {
                flatten(p, out)?;
            }
        }
        Node::Or(alts, pos) => {
            let (key, ranges) = ranges_of(Node::Or(alts, pos), pos)?;
            out.push((Atom::RangeUnion { key, ranges }, pos));
        }
    }
    Ok(())
}

/// Interprets a subtree as a union of closed ranges on one property.
fn ranges_of(node: Node, or_pos: Pos) -> Result<(String, Vec<Interval>), ParseError> {
    let not_a_range = |pos: Pos| {
        err(
            pos,
            "OR may only join ranges of a single property (`p in [a, b]` or `p >= a AND p <= b`)",
            &[],
        )
    };
    match node {
        Node::Atom(Atom::RangeUnion { key, ranges }, _) => Ok((key, ranges)),
        Node::Atom(_, pos) => Err(not_a_range(pos)),
        Node::Or(alts, _) => {
            let mut key: Option<String> = None;
            let mut all = Vec::new();
            for alt in alts {
                let (k, ranges) = ranges_of(alt, or_pos)?;
                match &key {
                    Some(existing) if *existing != k => {
                        return Err(err(
                            or_pos,
                            format!("OR joins ranges of different properties `{existing}` and `{k}`"),
                            &[],
                        ))
                    }
                    _ => key = Some(k),
                }
                all.extend(ranges);
            }
            Ok((key.expect("at least two alternatives"), all))
        }
        Node::And(parts) => {
            let mut atoms = Vec::new();
            for p in parts {
                flatten(p, &mut atoms)?;
            }
            let pos = atoms.first().map(|(_, p)| *p).unwrap_or(or_pos);
            let mut lo = None;
            let mut hi = None;
            let mut key: Option<String> = None;
            for (atom, p) in atoms {
                let Atom::Comparison { key: k, op, threshold } = atom else {
                    return Err(not_a_range(p));
                };
                if key.as_ref().is_some_and(|existing| *existing != k) {
                    return Err(not_a_range(p));
                }
                key = Some(k);
                match op {
                    CmpOp::Ge if lo.is_none() => lo = Some(threshold),
                    CmpOp::Le if hi.is_none() => hi = Some(threshold),
                    _ => return Err(not_a_range(p)),
                }
            }
            match (key, lo, hi) {
                (Some(key), Some(lo), Some(hi)) if lo <= hi => Ok((key, vec![Interval { lo, hi }])),
                (Some(_), Some(lo), Some(hi)) => Err(err(pos, format!("empty range [{lo}, {hi}]"), &[])),
                _ => Err(not_a_range(pos)),
            }
        }
    }
}

/// Parses filter text into a coalesced [`FilterExpr`].
pub fn parse_filter(text: &str) -> Result<FilterExpr, Error> {
    let toks = lex(text)?;
    let mut parser = Parser { toks, at: 0 };
    if *parser.peek() == Tok::Eof {
        return Ok(FilterExpr::all());
    }
    let root = parser.disjunct()?;
    if *parser.peek() != Tok::Eof {
        return Err(parser.unexpected(&["`AND`", "`OR`", "end of input"]).into());
    }
    let mut atoms = Vec::new();
    flatten(root, &mut atoms)?;
    let mut seen_unions: Vec<&str> = Vec::new();
    for (atom, pos) in &atoms {
        if let Atom::RangeUnion { key, .. } = atom {
            if seen_unions.contains(&key.as_str()) {
                return Err(err(
                    *pos,
                    format!("second range union on `{key}`; combine the ranges with OR"),
                    &[],
                )
                .into());
            }
            seen_unions.push(key);
        }
    }
    let expr = FilterExpr::new(atoms.into_iter().map(|(a, _)| a).collect())?;
    Ok(expr.coalesced())
}
