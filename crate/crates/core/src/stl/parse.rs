//! Recursive-descent parser for the formula DSL.
//!
//! Tokens: identifiers `[A-Za-z_][A-Za-z0-9_]*`, `F[`, `G[`, integers, `,`,
//! `]`, `&`, `|`, `!`, `(`, `)`. Precedence from tight to loose is `!` and the
//! temporal prefixes, then `&`, then `|`. The expression tree is parsed first
//! and then checked against the fragment, so grammar violations get a
//! dedicated error rather than a generic syntax error.

use super::ast::{Formula, Interval, NonTemporal};
use super::StlError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    FOpen,
    GOpen,
    Comma,
    RBracket,
    And,
    Or,
    Not,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, StlError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b',' => out.push((start, Tok::Comma)),
            b']' => out.push((start, Tok::RBracket)),
            b'&' => out.push((start, Tok::And)),
            b'|' => out.push((start, Tok::Or)),
            b'!' => out.push((start, Tok::Not)),
            b'(' => out.push((start, Tok::LParen)),
            b')' => out.push((start, Tok::RParen)),
            b'-' | b'0'..=b'9' => {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let lit = &text[start..i];
                let v = lit.parse::<i64>().map_err(|_| StlError::Syntax {
                    pos: start,
                    msg: format!("bad integer '{lit}'"),
                })?;
                out.push((start, Tok::Int(v)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                i += 1;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                let bracket = bytes.get(i) == Some(&b'[');
                match (word, bracket) {
                    ("F", true) => {
                        out.push((start, Tok::FOpen));
                        i += 1;
                    }
                    ("G", true) => {
                        out.push((start, Tok::GOpen));
                        i += 1;
                    }
                    _ => out.push((start, Tok::Ident(word.to_string()))),
                }
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(StlError::Syntax {
                    pos: start,
                    msg: format!("unexpected character '{ch}'"),
                });
            }
        }
        i += 1;
    }
    Ok(out)
}

/// Unchecked expression tree; temporal operators may appear anywhere here.
#[derive(Debug, Clone)]
enum Expr {
    Ident(String),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    F(Interval, Box<Expr>),
    G(Interval, Box<Expr>),
}

impl Expr {
    fn is_temporal(&self) -> bool {
        match self {
            Expr::Ident(_) => false,
            Expr::F(..) | Expr::G(..) => true,
            Expr::Not(e) => e.is_temporal(),
            Expr::And(l, r) | Expr::Or(l, r) => l.is_temporal() || r.is_temporal(),
        }
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn err(&self, msg: impl Into<String>) -> StlError {
        StlError::Syntax {
            pos: self.offset(),
            msg: msg.into(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), StlError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn or(&mut self) -> Result<Expr, StlError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            let rhs = self.and()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, StlError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn interval(&mut self) -> Result<Interval, StlError> {
        let lo = self.int()?;
        self.expect(Tok::Comma, "','")?;
        let hi = self.int()?;
        self.expect(Tok::RBracket, "']'")?;
        Interval::from_signed(lo, hi)
    }

    fn int(&mut self) -> Result<i64, StlError> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.err("expected integer bound")),
        }
    }

    fn unary(&mut self) -> Result<Expr, StlError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(Expr::Not(Box::new(self.unary()?)))
            }
            Some(Tok::FOpen) => {
                self.pos += 1;
                let i = self.interval()?;
                Ok(Expr::F(i, Box::new(self.unary()?)))
            }
            Some(Tok::GOpen) => {
                self.pos += 1;
                let i = self.interval()?;
                Ok(Expr::G(i, Box::new(self.unary()?)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.or()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::Ident(_)) => match self.bump() {
                Some(Tok::Ident(name)) => Ok(Expr::Ident(name)),
                _ => unreachable!(),
            },
            Some(_) => Err(self.err("expected formula")),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

fn to_nontemporal(e: &Expr) -> Result<NonTemporal, StlError> {
    match e {
        Expr::Ident(name) => Ok(NonTemporal::atom(name.clone())),
        Expr::Not(inner) => {
            if inner.is_temporal() {
                return Err(StlError::Grammar("negation applied to a temporal formula".into()));
            }
            Ok(NonTemporal::not(to_nontemporal(inner)?))
        }
        Expr::And(l, r) => Ok(NonTemporal::and(to_nontemporal(l)?, to_nontemporal(r)?)),
        Expr::Or(l, r) => Ok(NonTemporal::or(to_nontemporal(l)?, to_nontemporal(r)?)),
        Expr::F(..) | Expr::G(..) => Err(StlError::Grammar(
            "temporal operator nested under another operator".into(),
        )),
    }
}

fn operand(e: &Expr) -> Result<NonTemporal, StlError> {
    if e.is_temporal() {
        return Err(StlError::Grammar(
            "temporal operator applied to a temporal formula (only F[..] G[..] may be nested)".into(),
        ));
    }
    to_nontemporal(e)
}

fn to_formula(e: &Expr) -> Result<Formula, StlError> {
    if !e.is_temporal() {
        return Ok(Formula::State(to_nontemporal(e)?));
    }
    match e {
        Expr::And(l, r) => Ok(Formula::and(to_formula(l)?, to_formula(r)?)),
        Expr::F(outer, inner) => match inner.as_ref() {
            Expr::G(window, g) => Ok(Formula::EventuallyAlways(*outer, *window, operand(g)?)),
            other => Ok(Formula::Eventually(*outer, operand(other)?)),
        },
        Expr::G(window, inner) => Ok(Formula::Always(*window, operand(inner)?)),
        Expr::Not(_) => Err(StlError::Grammar("negation applied to a temporal formula".into())),
        Expr::Or(..) => Err(StlError::Grammar(
            "disjunction of temporal formulas is outside the fragment".into(),
        )),
        Expr::Ident(_) => unreachable!("identifiers are non-temporal"),
    }
}

/// Parse a formula string into a [`Formula`].
pub fn parse_spec(text: &str) -> Result<Formula, StlError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let expr = p.or()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    to_formula(&expr)
}

impl std::str::FromStr for Formula {
    type Err = StlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_spec(s)
    }
}
