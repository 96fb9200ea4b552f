//! Text format for systems:
//!
//! ```text
//! # comments run to end of line
//! dim = 2
//! f = [-x1*x2^2, 0]
//! g = [0, 1]
//! V = x1^2 + x2^2
//! theta = 0          # optional
//! ```
//!
//! Statements end at `;` or a newline. Expressions use `+ - * ^`,
//! parentheses, real literals and the variables `x1..x<dim>`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::field_algebra::{PolyField, PolyScalar};
use crate::system::{AffineSystem, SystemError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("expected {expected}, found {found}")]
    Expected { expected: String, found: String },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("invalid number `{0}`")]
    InvalidNumber(String),
    #[error("exponent must be a non-negative integer")]
    BadExponent,
    #[error("`{0}` assigned twice")]
    Duplicate(String),
    #[error("missing `{0}`")]
    Missing(&'static str),
    #[error("dim must be a positive integer")]
    BadDim,
    #[error("{name} has {found} component{}, dim={dim}", if *found == 1 { "" } else { "s" })]
    Arity { name: String, found: usize, dim: usize },
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

/// A parsed system with the optional `theta` term.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    pub system: AffineSystem<f64>,
    pub theta: Option<PolyScalar<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: usize,
    col: usize,
}

impl Pos {
    fn err(self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            kind,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Sym(char),
    Sep,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(s) => write!(f, "`{s}`"),
            Tok::Sym(c) => write!(f, "`{c}`"),
            Tok::Sep => f.write_str("end of statement"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let pos = Pos { line: li + 1, col: i + 1 };
            if c == '#' {
                break;
            } else if c.is_whitespace() {
                i += 1;
            } else if c == ';' {
                out.push((Tok::Sep, pos));
                i += 1;
            } else if "+-*^()[]=,".contains(c) {
                out.push((Tok::Sym(c), pos));
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            } else if c.is_ascii_digit() || c == '.' {
                let start = i;
                while i < chars.len() {
                    let d = chars[i];
                    let exp_sign = (d == '+' || d == '-') && matches!(chars[i - 1], 'e' | 'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push((Tok::Num(chars[start..i].iter().collect()), pos));
            } else {
                return Err(pos.err(ParseErrorKind::UnexpectedChar(c)));
            }
        }
        out.push((Tok::Sep, Pos { line: li + 1, col: chars.len() + 1 }));
    }
    let end = out.last().map(|(_, p)| *p).unwrap_or(Pos { line: 1, col: 1 });
    out.push((Tok::End, end));
    Ok(out)
}

#[derive(Clone, Debug)]
enum Expr {
    Num(f64),
    Var(String, Pos),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    fn to_poly(&self, dim: usize) -> Result<PolyScalar<f64>, ParseError> {
        Ok(match self {
            Expr::Num(v) => PolyScalar::constant(dim, *v),
            Expr::Var(name, pos) => {
                let index = name
                    .strip_prefix('x')
                    .filter(|d| !d.starts_with('0'))
                    .and_then(|d| d.parse::<usize>().ok())
                    .filter(|k| (1..=dim).contains(k))
                    .ok_or_else(|| pos.err(ParseErrorKind::UnknownIdentifier(name.clone())))?;
                PolyScalar::var(dim, index - 1)
            }
            Expr::Neg(e) => -e.to_poly(dim)?,
            Expr::Add(a, b) => &a.to_poly(dim)? + &b.to_poly(dim)?,
            Expr::Sub(a, b) => &a.to_poly(dim)? - &b.to_poly(dim)?,
            Expr::Mul(a, b) => &a.to_poly(dim)? * &b.to_poly(dim)?,
            Expr::Pow(a, k) => a.to_poly(dim)?.pow(*k),
        })
    }
}

enum Rhs {
    Scalar(Expr),
    List(Vec<Expr>),
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

    fn expected(&self, what: &str) -> ParseError {
        self.pos().err(ParseErrorKind::Expected {
            expected: what.to_string(),
            found: self.peek().to_string(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.expected(&format!("`{c}`")))
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.product()?;
        loop {
            if self.eat('+') {
                e = Expr::Add(Box::new(e), Box::new(self.product()?));
            } else if self.eat('-') {
                e = Expr::Sub(Box::new(e), Box::new(self.product()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.unary()?;
        while self.eat('*') {
            e = Expr::Mul(Box::new(e), Box::new(self.unary()?));
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let pos = self.pos();
        match self.bump().0 {
            Tok::Num(s) => s
                .parse::<u32>()
                .map(|k| Expr::Pow(Box::new(base), k))
                .map_err(|_| pos.err(ParseErrorKind::BadExponent)),
            _ => Err(pos.err(ParseErrorKind::BadExponent)),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(s) => {
                self.bump();
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(Expr::Num)
                    .ok_or_else(|| pos.err(ParseErrorKind::InvalidNumber(s)))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Expr::Var(name, pos))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            _ => Err(self.expected("an expression")),
        }
    }

    fn rhs(&mut self) -> Result<Rhs, ParseError> {
        if !self.eat('[') {
            return Ok(Rhs::Scalar(self.sum()?));
        }
        let mut items = Vec::new();
        if self.eat(']') {
            return Ok(Rhs::List(items));
        }
        loop {
            items.push(self.sum()?);
            if self.eat(']') {
                return Ok(Rhs::List(items));
            }
            self.expect(',')?;
        }
    }
}

/// Parses the text format into a validated system.
pub fn parse_system_spec(text: &str) -> Result<SystemSpec, ParseError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let mut stmts: BTreeMap<String, (Rhs, Pos)> = BTreeMap::new();
    loop {
        match p.peek().clone() {
            Tok::End => break,
            Tok::Sep => {
                p.bump();
            }
            Tok::Ident(name) => {
                let pos = p.pos();
                if !matches!(name.as_str(), "dim" | "f" | "g" | "V" | "theta") {
                    return Err(pos.err(ParseErrorKind::UnknownIdentifier(name)));
                }
                p.bump();
                p.expect('=')?;
                let rhs = p.rhs()?;
                if !matches!(p.peek(), Tok::Sep | Tok::End) {
                    return Err(p.expected("end of statement"));
                }
                if stmts.insert(name.clone(), (rhs, pos)).is_some() {
                    return Err(pos.err(ParseErrorKind::Duplicate(name)));
                }
            }
            _ => return Err(p.expected("an assignment")),
        }
    }
    let end = p.pos();
    let take = |stmts: &mut BTreeMap<String, (Rhs, Pos)>, key: &'static str| {
        stmts.remove(key).ok_or_else(|| end.err(ParseErrorKind::Missing(key)))
    };
    let dim = match take(&mut stmts, "dim")? {
        (Rhs::Scalar(Expr::Num(v)), _) if v >= 1.0 && v.fract() == 0.0 && v <= 64.0 => v as usize,
        (_, pos) => return Err(pos.err(ParseErrorKind::BadDim)),
    };
    let field = |name: &'static str, (rhs, pos): (Rhs, Pos)| -> Result<PolyField<f64>, ParseError> {
        let items = match rhs {
            Rhs::List(items) => items,
            Rhs::Scalar(e) => vec![e],
        };
        if items.len() != dim {
            return Err(pos.err(ParseErrorKind::Arity {
                name: name.to_string(),
                found: items.len(),
                dim,
            }));
        }
        let comps = items.iter().map(|e| e.to_poly(dim)).collect::<Result<Vec<_>, _>>()?;
        Ok(PolyField::new(comps).expect("nonempty"))
    };
    let scalar = |name: &'static str, (rhs, pos): (Rhs, Pos)| -> Result<PolyScalar<f64>, ParseError> {
        match rhs {
            Rhs::Scalar(e) => e.to_poly(dim),
            Rhs::List(items) => Err(pos.err(ParseErrorKind::Arity {
                name: name.to_string(),
                found: items.len(),
                dim: 1,
            })),
        }
    };
    let f = field("f", take(&mut stmts, "f")?)?;
    let g = field("g", take(&mut stmts, "g")?)?;
    let (v_rhs, v_pos) = take(&mut stmts, "V")?;
    let v = scalar("V", (v_rhs, v_pos))?;
    let theta = stmts.remove("theta").map(|s| scalar("theta", s)).transpose()?;
    let system = AffineSystem::new(f, g, v).map_err(|e| v_pos.err(e.into()))?;
    Ok(SystemSpec { system, theta })
}

/// Canonical text form; parses back to an equal system.
pub fn format_system_spec(sys: &AffineSystem<f64>, theta: Option<&PolyScalar<f64>>) -> String {
    let list = |field: &PolyField<f64>| {
        let parts: Vec<String> = field.components().iter().map(|c| c.to_string()).collect();
        format!("[{}]", parts.join(", "))
    };
    let mut s = format!("dim = {}\nf = {}\ng = {}\nV = {}\n", sys.dim(), list(sys.f()), list(sys.g()), sys.v());
    if let Some(t) = theta {
        s.push_str(&format!("theta = {t}\n"));
    }
    s
}
