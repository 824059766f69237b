//! Scalar coefficient functions `a(t)`.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-'? power
//! power  := atom ('^' number)?
//! atom   := number | 't' | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | exp | log | sqrt | tanh
//! ```
//!
//! Numbers are decimal literals with an optional exponent part. Exponents
//! of `^` are literal constants, never functions of `t`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt, Func::Tanh];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

/// Parsed coefficient expression. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    T,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Base raised to a literal real exponent.
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("`{func}` takes 1 argument but {found} were given (byte {offset})")]
    Arity { offset: usize, func: &'static str, found: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error in `{node}` at t = {t}: {reason}")]
pub struct EvalError {
    pub node: String,
    pub t: f64,
    pub reason: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push((i, Tok::Op(c as char)));
                i += 1;
            }
            b'(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            b',' => {
                out.push((i, Tok::Comma));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                if !value.is_finite() {
                    return Err(ParseError::Syntax {
                        offset: start,
                        message: format!("number `{text}` overflows"),
                    });
                }
                out.push((start, Tok::Num(value)));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: i,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        }
    }
    Ok(out)
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
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { offset: self.offset(), message: message.into() })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.bump();
            let inner = self.power()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.bump();
            return match self.bump() {
                Some(Tok::Num(n)) => Ok(Expr::Pow(Box::new(base), n)),
                _ => {
                    self.pos -= 1;
                    self.syntax("exponent must be a numeric literal")
                }
            };
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.bump() {
            Some(Tok::Num(n)) => Ok(Expr::Num(n)),
            Some(Tok::Ident(name)) => {
                if name == "t" {
                    return Ok(Expr::T);
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(ParseError::UnknownIdentifier { offset, name });
                };
                if self.peek() != Some(&Tok::LParen) {
                    return self.syntax(format!("expected `(` after `{name}`"));
                }
                self.bump();
                let mut args = Vec::new();
                if self.peek() != Some(&Tok::RParen) {
                    args.push(self.expr()?);
                    while self.peek() == Some(&Tok::Comma) {
                        self.bump();
                        args.push(self.expr()?);
                    }
                }
                if self.bump() != Some(Tok::RParen) {
                    self.pos -= 1;
                    return self.syntax("expected `)`");
                }
                if args.len() != 1 {
                    return Err(ParseError::Arity { offset, func: func.name(), found: args.len() });
                }
                Ok(Expr::Call(func, Box::new(args.pop().expect("one argument"))))
            }
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                if self.bump() != Some(Tok::RParen) {
                    self.pos -= 1;
                    return self.syntax("expected `)`");
                }
                Ok(inner)
            }
            Some(_) => {
                self.pos -= 1;
                self.syntax("expected a number, `t`, a function call or `(`")
            }
            None => self.syntax("unexpected end of input"),
        }
    }
}

/// Parses a coefficient expression.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let toks = lex(source)?;
    if toks.is_empty() {
        return Err(ParseError::Syntax { offset: 0, message: "empty expression".into() });
    }
    let mut p = Parser { toks, pos: 0, end: source.len() };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        return p.syntax("unexpected trailing input");
    }
    Ok(e)
}

impl FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

fn fmt_num(n: f64) -> String {
    // `{:?}` is the shortest representation that round-trips.
    let s = format!("{n:?}");
    match s.strip_suffix(".0") {
        Some(int) => int.to_string(),
        None => s,
    }
}

impl Expr {
    /// Evaluates the expression at time `t`.
    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        let fail = |node: &Expr, reason| Err(EvalError { node: node.render(), t, reason });
        let v = match self {
            Expr::Num(n) => *n,
            Expr::T => t,
            Expr::Neg(a) => -a.eval(t)?,
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval(t)?, b.eval(t)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return fail(self, "division by zero");
                        }
                        a / b
                    }
                }
            }
            Expr::Pow(base, e) => {
                let b = base.eval(t)?;
                if b == 0.0 && *e < 0.0 {
                    return fail(self, "zero raised to a negative power");
                }
                if b < 0.0 && e.fract() != 0.0 {
                    return fail(self, "negative base with non-integer exponent");
                }
                b.powf(*e)
            }
            Expr::Call(f, a) => {
                let a = a.eval(t)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Tanh => a.tanh(),
                    Func::Log => {
                        if a <= 0.0 {
                            return fail(self, "logarithm of a non-positive number");
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return fail(self, "square root of a negative number");
                        }
                        a.sqrt()
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            fail(self, "non-finite result")
        }
    }

    /// Renders with the minimum parentheses the grammar needs.
    pub fn render(&self) -> String {
        let mut s = String::new();
        self.write(&mut s, 0);
        s
    }

    // `ctx`: 0 = anywhere, 1 = right of +/-, 2 = left of * or /,
    // 3 = right of * or /, 4 = operand of unary minus, 5 = base of ^.
    fn write(&self, out: &mut String, ctx: u8) {
        match self {
            Expr::Num(n) => out.push_str(&fmt_num(*n)),
            Expr::T => out.push('t'),
            Expr::Call(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.write(out, 0);
                out.push(')');
            }
            Expr::Pow(b, e) => {
                let paren = ctx >= 5;
                if paren {
                    out.push('(');
                }
                b.write(out, 5);
                out.push('^');
                out.push_str(&fmt_num(*e));
                if paren {
                    out.push(')');
                }
            }
            Expr::Neg(a) => {
                let paren = ctx >= 4;
                if paren {
                    out.push('(');
                }
                out.push('-');
                a.write(out, 4);
                if paren {
                    out.push(')');
                }
            }
            Expr::Binary(op, a, b) => {
                let prec = op.precedence();
                let paren = match prec {
                    1 => ctx >= 1,
                    _ => ctx >= 3,
                };
                if paren {
                    out.push('(');
                }
                let (lctx, rctx) = if prec == 1 { (0, 1) } else { (2, 3) };
                a.write(out, lctx);
                out.push(op.symbol());
                b.write(out, rctx);
                if paren {
                    out.push(')');
                }
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// The five coefficient functions `a_1(t), ..., a_5(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSet {
    exprs: [Expr; 5],
    sources: [String; 5],
}

impl CoeffSet {
    pub fn parse<S: AsRef<str>>(sources: &[S; 5]) -> Result<Self, (usize, ParseError)> {
        let mut exprs = Vec::with_capacity(5);
        for (k, s) in sources.iter().enumerate() {
            exprs.push(parse(s.as_ref()).map_err(|e| (k + 1, e))?);
        }
        Ok(Self {
            exprs: exprs.try_into().expect("five expressions"),
            sources: sources.each_ref().map(|s| s.as_ref().to_string()),
        })
    }

    /// Convenience constructor for literal sources; panics on malformed input.
    pub fn from_strs(sources: [&str; 5]) -> Self {
        Self::parse(&sources).unwrap_or_else(|(k, e)| panic!("a{k}: {e}"))
    }

    /// All five coefficients identically zero.
    pub fn zero() -> Self {
        Self::from_strs(["0"; 5])
    }

    /// Only `a_alpha = 1`, the rest zero (`alpha` in `1..=5`).
    pub fn single(alpha: usize) -> Self {
        let mut s = ["0"; 5];
        s[alpha - 1] = "1";
        Self::from_strs(s)
    }

    /// `a1 = 1, a2 = sin t, a3 = cos t, a4 = 1, a5 = t`.
    pub fn standard() -> Self {
        Self::from_strs(["1", "sin(t)", "cos(t)", "1", "t"])
    }

    pub fn exprs(&self) -> &[Expr; 5] {
        &self.exprs
    }

    pub fn sources(&self) -> &[String; 5] {
        &self.sources
    }

    pub fn eval(&self, t: f64) -> Result<[f64; 5], EvalError> {
        let mut a = [0.0; 5];
        for (slot, e) in a.iter_mut().zip(&self.exprs) {
            *slot = e.eval(t)?;
        }
        Ok(a)
    }
}
