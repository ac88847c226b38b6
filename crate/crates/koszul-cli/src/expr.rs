//! Expression parser.
//!
//! ```text
//! expr   := ['-'] term (('+' | '-') term)*
//! term   := factor (['*'] factor)*
//! factor := atom ['^' nat]
//! atom   := rational | 'i' | 'hbar' | ident | '(' expr ')'
//! ```
//!
//! Identifiers resolve against a chart, then against named macros. Positions
//! in errors are byte offsets into the input.

use std::collections::BTreeMap;
use std::sync::Arc;

use koszul_core::superalgebra::{imag, Chart, Coeff, Parity, Poly};
use num::{BigInt, BigRational};

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    Open,
    Close,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, CliError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let digits = |mut j: usize| {
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        j
    };
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => out.push((start, Tok::Plus)),
            '-' => out.push((start, Tok::Minus)),
            '*' => out.push((start, Tok::Star)),
            '^' => out.push((start, Tok::Caret)),
            '(' => out.push((start, Tok::Open)),
            ')' => out.push((start, Tok::Close)),
            '0'..='9' => {
                let end = digits(i);
                let num: BigInt = text[i..end].parse().unwrap();
                // `3/2` is a single literal; the grammar has no division.
                let (den, end) = if end + 1 < bytes.len()
                    && bytes[end] == b'/'
                    && bytes[end + 1].is_ascii_digit()
                {
                    let e2 = digits(end + 1);
                    (text[end + 1..e2].parse::<BigInt>().unwrap(), e2)
                } else {
                    (BigInt::from(1), end)
                };
                if den == BigInt::from(0) {
                    return Err(CliError::parse(start, "zero denominator"));
                }
                out.push((start, Tok::Num(BigRational::new(num, den))));
                i = end;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < bytes.len()
                    && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_' || bytes[j] == b'\'')
                {
                    j += 1;
                }
                out.push((start, Tok::Ident(text[i..j].to_string())));
                i = j;
                continue;
            }
            other => {
                return Err(CliError::parse(
                    start,
                    format!("unexpected character `{other}`"),
                ))
            }
        }
        i += 1;
    }
    Ok(out)
}

/// Parses expressions on one chart. `macros` maps names to expression text,
/// expanded on demand (recursively, with cycle detection).
pub struct Parser<'a> {
    chart: Arc<Chart>,
    macros: &'a BTreeMap<String, String>,
}

struct State<'s> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    stack: &'s mut Vec<String>,
}

impl<'a> Parser<'a> {
    pub fn new(chart: &Arc<Chart>, macros: &'a BTreeMap<String, String>) -> Parser<'a> {
        Parser {
            chart: chart.clone(),
            macros,
        }
    }

    pub fn parse(&self, text: &str) -> Result<Poly, CliError> {
        self.parse_nested(text, &mut Vec::new())
    }

    fn parse_nested(&self, text: &str, stack: &mut Vec<String>) -> Result<Poly, CliError> {
        let toks = lex(text)?;
        let mut st = State {
            toks,
            pos: 0,
            end: text.len(),
            stack,
        };
        if st.toks.is_empty() {
            return Err(CliError::parse(0, "empty expression"));
        }
        let v = self.expr(&mut st)?;
        if let Some((at, t)) = st.toks.get(st.pos) {
            return Err(CliError::parse(*at, format!("unexpected {t:?}")));
        }
        Ok(v)
    }

    fn here(&self, st: &State) -> usize {
        st.toks.get(st.pos).map(|t| t.0).unwrap_or(st.end)
    }

    fn peek<'t>(&self, st: &'t State) -> Option<&'t Tok> {
        st.toks.get(st.pos).map(|t| &t.1)
    }

    fn expr(&self, st: &mut State) -> Result<Poly, CliError> {
        let neg = self.peek(st) == Some(&Tok::Minus);
        if neg {
            st.pos += 1;
        }
        let first = self.term(st)?;
        let mut acc = if neg { -first } else { first };
        loop {
            match self.peek(st) {
                Some(Tok::Plus) => {
                    st.pos += 1;
                    acc = &acc + &self.term(st)?;
                }
                Some(Tok::Minus) => {
                    st.pos += 1;
                    acc = &acc - &self.term(st)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&self, st: &mut State) -> Result<Poly, CliError> {
        let mut acc = self.factor(st)?;
        loop {
            match self.peek(st) {
                Some(Tok::Star) => {
                    st.pos += 1;
                    acc = &acc * &self.factor(st)?;
                }
                Some(Tok::Num(_) | Tok::Ident(_) | Tok::Open) => acc = &acc * &self.factor(st)?,
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&self, st: &mut State) -> Result<Poly, CliError> {
        let at = self.here(st);
        let base = self.atom(st)?;
        if self.peek(st) != Some(&Tok::Caret) {
            return Ok(base);
        }
        st.pos += 1;
        let eat = self.here(st);
        let n = match st.toks.get(st.pos) {
            Some((_, Tok::Num(q))) if q.is_integer() => q.to_integer(),
            _ => return Err(CliError::parse(eat, "exponent must be a natural number")),
        };
        st.pos += 1;
        let n: u32 = n
            .try_into()
            .map_err(|_| CliError::parse(eat, "exponent out of range"))?;
        let (_, odd) = base.split_parity();
        if n >= 2 && !odd.is_zero() {
            let what = if base.parity() == Some(Parity::Odd) {
                "odd variable squared"
            } else {
                "power of an expression with an odd part"
            };
            return Err(CliError::parse(at, what));
        }
        Ok(base.pow(n))
    }

    fn atom(&self, st: &mut State) -> Result<Poly, CliError> {
        let at = self.here(st);
        let tok = st
            .toks
            .get(st.pos)
            .map(|t| t.1.clone())
            .ok_or_else(|| CliError::parse(at, "unexpected end of input"))?;
        st.pos += 1;
        match tok {
            Tok::Num(q) => Ok(Poly::constant(
                &self.chart,
                Coeff::new(q, BigRational::from_integer(0.into())),
            )),
            Tok::Open => {
                let v = self.expr(st)?;
                match self.peek(st) {
                    Some(Tok::Close) => {
                        st.pos += 1;
                        Ok(v)
                    }
                    _ => Err(CliError::parse(self.here(st), "expected `)`")),
                }
            }
            Tok::Ident(name) => self.ident(&name, at, st),
            t => Err(CliError::parse(at, format!("unexpected {t:?}"))),
        }
    }

    fn ident(&self, name: &str, at: usize, st: &mut State) -> Result<Poly, CliError> {
        match name {
            "i" => return Ok(Poly::constant(&self.chart, imag(1))),
            "hbar" => return Ok(Poly::hbar_pow(&self.chart, 1)),
            _ => {}
        }
        if let Some(k) = self.chart.index_of(name) {
            return Ok(Poly::var(&self.chart, k));
        }
        if let Some(text) = self.macros.get(name) {
            if st.stack.iter().any(|s| s == name) {
                return Err(CliError::parse(at, format!("`{name}` refers to itself")));
            }
            st.stack.push(name.to_string());
            let v = self
                .parse_nested(text, st.stack)
                .map_err(|e| CliError::parse(at, format!("in `{name}`: {e}")))?;
            st.stack.pop();
            return Ok(v);
        }
        Err(CliError::parse(at, format!("unknown identifier `{name}`")))
    }
}

/// Identifiers mentioned in `text`, without `i` and `hbar`.
pub fn identifiers(text: &str) -> Result<Vec<String>, CliError> {
    Ok(lex(text)?
        .into_iter()
        .filter_map(|(_, t)| match t {
            Tok::Ident(s) if s != "i" && s != "hbar" => Some(s),
            _ => None,
        })
        .collect())
}
