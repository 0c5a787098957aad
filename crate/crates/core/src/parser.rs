//! Arithmetic expressions over named variables, parsed into polynomials.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary ('*' unary)*
//! unary   := '-' unary | power
//! power   := primary (('^' | '**') uint)?
//! primary := number | identifier | '(' expr ')'
//! ```
//!
//! Unary minus applies to the whole power, so `-x^2` is `-(x^2)`.
//! Implicit multiplication (`2x`) is rejected.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::poly::{Monomial, Poly};
use crate::scalar::Scalar;

/// Failure to parse an expression. `position` is a 1-based character index.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at position {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl ParseError {
    fn new(position: usize, message: impl Into<String>) -> Self {
        Self {
            position,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { value: f64, integral: bool },
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    pos: usize,
}

fn tokenize(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' if chars.get(i + 1) == Some(&'*') => {
                i += 1;
                Tok::Caret
            }
            '*' => Tok::Star,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            d if d.is_ascii_digit() => {
                let start = i;
                while i + 1 < chars.len() && chars[i + 1].is_ascii_digit() {
                    i += 1;
                }
                let mut integral = true;
                if chars.get(i + 1) == Some(&'.') {
                    if !chars.get(i + 2).is_some_and(char::is_ascii_digit) {
                        return Err(ParseError::new(i + 2, "expected digits after decimal point"));
                    }
                    integral = false;
                    i += 1;
                    while i + 1 < chars.len() && chars[i + 1].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text: String = chars[start..=i].iter().collect();
                let value = text
                    .parse::<f64>()
                    .map_err(|_| ParseError::new(pos, format!("invalid number `{text}`")))?;
                Tok::Num { value, integral }
            }
            a if a.is_alphabetic() || a == '_' => {
                let start = i;
                while i + 1 < chars.len() && (chars[i + 1].is_alphanumeric() || chars[i + 1] == '_') {
                    i += 1;
                }
                Tok::Ident(chars[start..=i].iter().collect())
            }
            other => return Err(ParseError::new(pos, format!("unexpected character `{other}`"))),
        };
        out.push(Spanned { tok, pos });
        i += 1;
    }
    Ok(out)
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    /// Evaluates the tree directly, without expanding to a polynomial.
    pub fn eval(&self, env: &HashMap<String, f64>) -> Option<f64> {
        Some(match self {
            Expr::Num(v) => *v,
            Expr::Var(name) => *env.get(name)?,
            Expr::Neg(a) => -a.eval(env)?,
            Expr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expr::Pow(a, k) => a.eval(env)?.powi(*k as i32),
        })
    }

    /// Expands the tree into canonical polynomial form.
    pub fn to_poly<T: Scalar>(&self) -> Poly<T> {
        match self {
            Expr::Num(v) => Poly::constant(T::of(*v)),
            Expr::Var(name) => Poly::var(name),
            Expr::Neg(a) => -a.to_poly::<T>(),
            Expr::Add(a, b) => a.to_poly::<T>() + b.to_poly::<T>(),
            Expr::Sub(a, b) => a.to_poly::<T>() - b.to_poly::<T>(),
            Expr::Mul(a, b) => a.to_poly::<T>() * b.to_poly::<T>(),
            Expr::Pow(a, k) => a.to_poly::<T>().pow(*k),
        }
    }
}

struct Parser {
    toks: Vec<Spanned>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|s| &s.tok)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |s| s.pos)
    }

    fn bump(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Star) = self.peek() {
            self.bump();
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(Tok::Minus) = self.peek() {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if let Some(Tok::Caret) = self.peek() {
            let caret = self.pos();
            self.bump();
            return match self.bump() {
                Some(Spanned {
                    tok: Tok::Num { value, integral: true },
                    ..
                }) if value <= u32::MAX as f64 => Ok(Expr::Pow(Box::new(base), value as u32)),
                _ => Err(ParseError::new(
                    caret,
                    "exponent after `^` must be a non-negative integer literal",
                )),
            };
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Some(Spanned {
                tok: Tok::Num { value, .. },
                ..
            }) => Ok(Expr::Num(value)),
            Some(Spanned {
                tok: Tok::Ident(name),
                ..
            }) => Ok(Expr::Var(name)),
            Some(Spanned { tok: Tok::LParen, .. }) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Spanned { tok: Tok::RParen, .. }) => Ok(inner),
                    _ => Err(ParseError::new(pos, "unbalanced parenthesis: `(` is never closed")),
                }
            }
            Some(Spanned { tok: Tok::RParen, .. }) => {
                Err(ParseError::new(pos, "unbalanced parenthesis: unexpected `)`"))
            }
            Some(other) => Err(ParseError::new(pos, format!("unexpected token {:?}", other.tok))),
            None => Err(ParseError::new(pos, "unexpected end of expression")),
        }
    }
}

/// Parses `src` into an expression tree.
pub fn parse_ast(src: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(src)?;
    let end = src.chars().count() + 1;
    if toks.is_empty() {
        return Err(ParseError::new(1, "empty expression"));
    }
    let mut parser = Parser { toks, at: 0, end };
    let expr = parser.expr()?;
    if parser.at < parser.toks.len() {
        let pos = parser.pos();
        let msg = match parser.peek() {
            Some(Tok::RParen) => "unbalanced parenthesis: unexpected `)`".to_string(),
            Some(t) => format!("unexpected token {t:?}"),
            None => unreachable!(),
        };
        return Err(ParseError::new(pos, msg));
    }
    Ok(expr)
}

/// Parses `src` and expands it into a polynomial.
pub fn parse_expression<T: Scalar>(src: &str) -> Result<Poly<T>, ParseError> {
    parse_ast(src).map(|e| e.to_poly())
}

fn format_monomial(m: &Monomial) -> String {
    let vars = m.vars();
    let mut parts = Vec::new();
    let mut i = 0;
    while i < vars.len() {
        let mut j = i;
        while j < vars.len() && vars[j] == vars[i] {
            j += 1;
        }
        match j - i {
            1 => parts.push(vars[i].clone()),
            k => parts.push(format!("{}^{k}", vars[i])),
        }
        i = j;
    }
    parts.join("*")
}

/// Renders a polynomial, highest degree first, ties in monomial order.
/// `parse_expression(&format_polynomial(&p)) == p`.
pub fn format_polynomial<T: Scalar>(poly: &Poly<T>) -> String {
    let mut terms: Vec<(&Monomial, T)> = poly.terms().collect();
    terms.sort_by(|(a, _), (b, _)| b.degree().cmp(&a.degree()).then_with(|| a.cmp(b)));
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (k, (m, c)) in terms.into_iter().enumerate() {
        let negative = c < T::zero();
        let mag = c.abs();
        match (k, negative) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        if m.is_constant() {
            let _ = write!(out, "{mag}");
        } else if mag == T::one() {
            out.push_str(&format_monomial(m));
        } else {
            let _ = write!(out, "{mag}*{}", format_monomial(m));
        }
    }
    out
}
