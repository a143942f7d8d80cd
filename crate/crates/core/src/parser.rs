//! Reader for the `.crn` text format.
//!
//! ```text
//! file       = { line } ;
//! line       = [ directive | reaction ] [ "#" comment ] newline ;
//! directive  = "@volume" real | "@units" text ;
//! reaction   = expr arrow expr ";" rate [ "," rate ] ;
//! arrow      = "->" | "<->" ;
//! expr       = "0" | term { "+" term } ;
//! term       = [ uint ] ident ;
//! ident      = ( letter | "_" ) { letter | digit | "_" } ;
//! ```
//!
//! Whitespace between tokens is ignored, so `2B` and `2 B` are the same term.
//! `->` takes exactly one rate, `<->` takes a forward and a reverse rate and
//! expands to two reactions. Repeated terms in one expression add up.

use std::collections::HashMap;

use thiserror::Error;

use crate::model::{Complex, ModelError, ReactionNetwork, Species};

#[derive(Debug, Error, PartialEq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(u64),
    Plus,
    Arrow,
    BiArrow,
}

struct Lexed {
    tok: Tok,
    col: usize,
}

fn err(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        column,
        message: message.into(),
    }
}

fn lex(s: &str, line: usize, col0: usize) -> Result<Vec<Lexed>, ParseError> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        if c.is_whitespace() {
            i += 1;
        } else if c == '+' {
            out.push(Lexed { tok: Tok::Plus, col });
            i += 1;
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push(Lexed { tok: Tok::Arrow, col });
            i += 2;
        } else if c == '<' && chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') {
            out.push(Lexed { tok: Tok::BiArrow, col });
            i += 3;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<u64>()
                .map_err(|_| err(line, col, "coefficient too large"))?;
            out.push(Lexed { tok: Tok::Int(v), col });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Lexed {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                col,
            });
        } else {
            return Err(err(line, col, format!("unexpected character '{}'", c)));
        }
    }
    Ok(out)
}

type Terms = Vec<(String, u32, usize)>;

/// Parses one side of a reaction. Returns `(name, coefficient, column)` terms;
/// an empty list is the zero complex.
fn parse_expr(toks: &[Lexed], line: usize, end_col: usize) -> Result<Terms, ParseError> {
    if toks.is_empty() {
        return Err(err(line, end_col, "expected a complex"));
    }
    if toks.len() == 1 && toks[0].tok == Tok::Int(0) {
        return Ok(Vec::new());
    }
    let mut terms = Vec::new();
    let mut k = 0;
    loop {
        let mut coeff = 1u64;
        let col = toks.get(k).map(|t| t.col).unwrap_or(end_col);
        if let Some(Lexed { tok: Tok::Int(v), col }) = toks.get(k) {
            if *v == 0 {
                return Err(err(line, *col, "coefficient must be positive"));
            }
            coeff = *v;
            k += 1;
        }
        match toks.get(k) {
            Some(Lexed {
                tok: Tok::Ident(name), ..
            }) => {
                let coeff = u32::try_from(coeff).map_err(|_| err(line, col, "coefficient too large"))?;
                terms.push((name.clone(), coeff, col));
                k += 1;
            }
            Some(t) => return Err(err(line, t.col, "expected a species name")),
            None => return Err(err(line, end_col, "expected a species name")),
        }
        match toks.get(k) {
            None => break,
            Some(Lexed { tok: Tok::Plus, .. }) => {
                if k + 1 == toks.len() {
                    return Err(err(line, end_col, "expected a term after '+'"));
                }
                k += 1;
            }
            Some(t) => return Err(err(line, t.col, "expected '+' or end of complex")),
        }
    }
    Ok(terms)
}

fn parse_real(s: &str, line: usize, col: usize) -> Result<f64, ParseError> {
    let t = s.trim();
    let v: f64 = t
        .parse()
        .map_err(|_| err(line, col, format!("invalid number '{}'", t)))?;
    if !v.is_finite() {
        return Err(err(line, col, format!("invalid number '{}'", t)));
    }
    Ok(v)
}

struct Statement {
    line: usize,
    col: usize,
    lhs: Terms,
    rhs: Terms,
    rates: Vec<(f64, usize)>,
}

/// Parses `.crn` text into a validated network.
pub fn parse_network(text: &str) -> Result<ReactionNetwork, ParseError> {
    let mut volume: Option<f64> = None;
    let mut units: Option<String> = None;
    let mut statements = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let lead = body.len() - body.trim_start().len();
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let col0 = body[..lead].chars().count() + 1;
        if let Some(rest) = trimmed.strip_prefix('@') {
            let (name, arg) = match rest.find(char::is_whitespace) {
                Some(p) => (&rest[..p], rest[p..].trim()),
                None => (rest, ""),
            };
            let arg_col = col0 + 1 + name.chars().count() + 1;
            match name {
                "volume" => {
                    if volume.is_some() {
                        return Err(err(line, col0, "@volume given twice"));
                    }
                    let v = parse_real(arg, line, arg_col)?;
                    if v <= 0.0 {
                        return Err(err(line, arg_col, "volume must be positive"));
                    }
                    volume = Some(v);
                }
                "units" => {
                    if arg.is_empty() {
                        return Err(err(line, arg_col, "@units needs a value"));
                    }
                    units = Some(arg.to_string());
                }
                _ => return Err(err(line, col0, format!("unknown directive '@{}'", name))),
            }
            continue;
        }
        let (lhs_rhs, rates_text, semi_col) = match body.find(';') {
            Some(p) => (&body[..p], &body[p + 1..], body[..p].chars().count() + 1),
            None => {
                return Err(err(
                    line,
                    body.trim_end().chars().count() + 1,
                    "expected ';' followed by rate constant(s)",
                ))
            }
        };
        let toks = lex(lhs_rhs, line, 1)?;
        let arrows: Vec<usize> = toks
            .iter()
            .enumerate()
            .filter(|(_, t)| matches!(t.tok, Tok::Arrow | Tok::BiArrow))
            .map(|(i, _)| i)
            .collect();
        if arrows.is_empty() {
            return Err(err(line, col0, "expected '->' or '<->'"));
        }
        if arrows.len() > 1 {
            return Err(err(line, toks[arrows[1]].col, "more than one arrow"));
        }
        let a = arrows[0];
        let reversible = toks[a].tok == Tok::BiArrow;
        let lhs = parse_expr(&toks[..a], line, toks[a].col)?;
        let rhs = parse_expr(&toks[a + 1..], line, semi_col)?;

        let mut rates = Vec::new();
        let mut offset = semi_col + 1;
        for piece in rates_text.split(',') {
            let lead = piece.len() - piece.trim_start().len();
            let col = offset + piece[..lead].chars().count();
            if piece.trim().is_empty() {
                return Err(err(line, col, "expected a rate constant"));
            }
            rates.push((parse_real(piece, line, col)?, col));
            offset += piece.chars().count() + 1;
        }
        let want = if reversible { 2 } else { 1 };
        if rates.len() != want {
            return Err(err(
                line,
                semi_col,
                format!(
                    "'{}' needs {} rate constant(s), got {}",
                    if reversible { "<->" } else { "->" },
                    want,
                    rates.len()
                ),
            ));
        }
        statements.push(Statement {
            line,
            col: col0,
            lhs,
            rhs,
            rates,
        });
        if reversible {
            let s = statements.last_mut().unwrap();
            let rev = s.rates.pop().unwrap();
            let (lhs, rhs) = (s.rhs.clone(), s.lhs.clone());
            let (line, col) = (s.line, s.col);
            statements.push(Statement {
                line,
                col,
                lhs,
                rhs,
                rates: vec![rev],
            });
        }
    }

    let mut order: Vec<String> = Vec::new();
    let mut idx: HashMap<String, usize> = HashMap::new();
    for s in &statements {
        for (name, _, _) in s.lhs.iter().chain(&s.rhs) {
            if !idx.contains_key(name) {
                idx.insert(name.clone(), order.len());
                order.push(name.clone());
            }
        }
    }
    let m = order.len();
    let mut net = ReactionNetwork {
        species: order
            .iter()
            .enumerate()
            .map(|(i, n)| Species {
                name: n.clone(),
                index: i,
            })
            .collect(),
        complexes: Vec::new(),
        reactions: Vec::new(),
        volume: volume.unwrap_or(1.0),
        units,
    };
    let to_complex = |terms: &Terms| {
        let mut c = vec![0u32; m];
        for (name, k, _) in terms {
            c[idx[name]] += k;
        }
        Complex::new(c)
    };
    let mut lookup = HashMap::new();
    for s in &statements {
        let src = net.intern(&mut lookup, to_complex(&s.lhs));
        let prod = net.intern(&mut lookup, to_complex(&s.rhs));
        let (rate, rate_col) = s.rates[0];
        net.push_reaction(src, prod, rate).map_err(|e| match e {
            ModelError::NonPositiveRate(_) => err(s.line, rate_col, e.to_string()),
            other => err(s.line, s.col, other.to_string()),
        })?;
    }
    if net.reactions.is_empty() {
        return Err(err(1, 1, "network has no reactions"));
    }
    Ok(net)
}
