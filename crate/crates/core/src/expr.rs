//! A small closed expression grammar for instance data: polynomials,
//! `abs`, `sqrt`, `sin`, `cos`, constants, and composition by arithmetic.
//! Expressions are parsed from strings, evaluated on a fixed variable
//! environment, and differentiated symbolically with respect to `y`.
//!
//! Recognized variables: `x1`, `x2` (position), `y` (state value),
//! `mu` (parameter value), `t` (argument of the control-cost weight).
//! `pi` is a constant.

use std::fmt;

use crate::error::{Error, Result};

/// Slot indices into the evaluation environment.
pub const VAR_X1: usize = 0;
pub const VAR_X2: usize = 1;
pub const VAR_Y: usize = 2;
pub const VAR_MU: usize = 3;
pub const VAR_T: usize = 4;

pub const NUM_VARS: usize = 5;

/// Evaluation environment: values for `[x1, x2, y, mu, t]`.
pub type Env = [f64; NUM_VARS];

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Neg(Box<Expr>),
    Abs(Box<Expr>),
    Sqrt(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    /// Sign of the argument, with sign(0) = 0. Not part of the surface
    /// grammar; produced by differentiating `abs`.
    Signum(Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        Parser::new(src).parse_full()
    }

    pub fn eval(&self, env: &Env) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::Var(i) => env[*i],
            Expr::Add(a, b) => a.eval(env) + b.eval(env),
            Expr::Sub(a, b) => a.eval(env) - b.eval(env),
            Expr::Mul(a, b) => a.eval(env) * b.eval(env),
            Expr::Div(a, b) => a.eval(env) / b.eval(env),
            Expr::Pow(a, k) => a.eval(env).powi(*k),
            Expr::Neg(a) => -a.eval(env),
            Expr::Abs(a) => a.eval(env).abs(),
            Expr::Sqrt(a) => a.eval(env).sqrt(),
            Expr::Sin(a) => a.eval(env).sin(),
            Expr::Cos(a) => a.eval(env).cos(),
            Expr::Signum(a) => {
                let v = a.eval(env);
                if v == 0.0 {
                    0.0
                } else {
                    v.signum()
                }
            }
        }
    }

    /// Symbolic derivative with respect to the variable in `slot`.
    ///
    /// `abs` differentiates to the sign function (zero at the kink), which
    /// matches the one-sided derivatives used by the built-in instances.
    pub fn derivative(&self, slot: usize) -> Expr {
        use Expr::*;
        match self {
            Num(_) => Num(0.0),
            Var(i) => Num(if *i == slot { 1.0 } else { 0.0 }),
            Add(a, b) => add(a.derivative(slot), b.derivative(slot)),
            Sub(a, b) => sub(a.derivative(slot), b.derivative(slot)),
            Mul(a, b) => add(
                mul(a.derivative(slot), (**b).clone()),
                mul((**a).clone(), b.derivative(slot)),
            ),
            Div(a, b) => Expr::Div(
                Box::new(sub(
                    mul(a.derivative(slot), (**b).clone()),
                    mul((**a).clone(), b.derivative(slot)),
                )),
                Box::new(Pow(b.clone(), 2)),
            ),
            Pow(a, k) => mul(
                mul(Num(f64::from(*k)), Pow(a.clone(), k - 1)),
                a.derivative(slot),
            ),
            Neg(a) => neg(a.derivative(slot)),
            Abs(a) => mul(sign((**a).clone()), a.derivative(slot)),
            Sqrt(a) => Expr::Div(
                Box::new(a.derivative(slot)),
                Box::new(mul(Num(2.0), Sqrt(a.clone()))),
            ),
            Sin(a) => mul(Cos(a.clone()), a.derivative(slot)),
            Cos(a) => neg(mul(Sin(a.clone()), a.derivative(slot))),
            // sign is piecewise constant
            Signum(_) => Num(0.0),
        }
    }

    /// True when no variable outside `allowed` occurs in the expression.
    pub fn uses_only(&self, allowed: &[usize]) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Var(i) => allowed.contains(i),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.uses_only(allowed) && b.uses_only(allowed)
            }
            Expr::Pow(a, _)
            | Expr::Neg(a)
            | Expr::Abs(a)
            | Expr::Sqrt(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Signum(a) => a.uses_only(allowed),
        }
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), _) if *x == 0.0 => b,
        (_, Expr::Num(x)) if *x == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Expr::Num(x)) if *x == 0.0 => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), _) | (_, Expr::Num(x)) if *x == 0.0 => Expr::Num(0.0),
        (Expr::Num(x), _) if *x == 1.0 => b,
        (_, Expr::Num(x)) if *x == 1.0 => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(x) => Expr::Num(-x),
        other => Expr::Neg(Box::new(other)),
    }
}

fn sign(a: Expr) -> Expr {
    Expr::Signum(Box::new(a))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(
                f,
                "{}",
                match *i {
                    VAR_X1 => "x1",
                    VAR_X2 => "x2",
                    VAR_Y => "y",
                    VAR_MU => "mu",
                    VAR_T => "t",
                    _ => "?",
                }
            ),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, k) => write!(f, "{a}^{k}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Abs(a) => write!(f, "abs({a})"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Signum(a) => write!(f, "sign({a})"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn parse_full(mut self) -> Result<Expr> {
        let e = self.expr()?;
        self.skip_ws();
        if self.pos < self.src.len() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(e)
    }

    fn err(&self, message: &str) -> Error {
        Error::Parse {
            line: 1,
            column: self.pos + 1,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let neg = if self.peek() == Some(b'-') {
                self.pos += 1;
                true
            } else {
                false
            };
            let start = self.pos;
            while self.src.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.err("expected integer exponent"));
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let k: i32 = digits
                .parse()
                .map_err(|_| self.err("exponent out of range"))?;
            return Ok(Expr::Pow(Box::new(base), if neg { -k } else { k }));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            _ => Err(self.err("expected expression")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_digit() || *c == b'.' || *c == b'e' || *c == b'E')
        {
            // allow a sign right after an exponent marker
            self.pos += 1;
            if matches!(self.src.get(self.pos - 1), Some(b'e') | Some(b'E'))
                && matches!(self.src.get(self.pos), Some(b'+') | Some(b'-'))
            {
                self.pos += 1;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| self.err("malformed number"))
    }

    fn ident(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match name {
            "x1" => Ok(Expr::Var(VAR_X1)),
            "x2" => Ok(Expr::Var(VAR_X2)),
            "y" => Ok(Expr::Var(VAR_Y)),
            "mu" => Ok(Expr::Var(VAR_MU)),
            "t" => Ok(Expr::Var(VAR_T)),
            "pi" => Ok(Expr::Num(std::f64::consts::PI)),
            "abs" | "sqrt" | "sin" | "cos" => {
                if self.peek() != Some(b'(') {
                    return Err(self.err("expected '(' after function name"));
                }
                self.pos += 1;
                let arg = Box::new(self.expr()?);
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(match name {
                    "abs" => Expr::Abs(arg),
                    "sqrt" => Expr::Sqrt(arg),
                    "sin" => Expr::Sin(arg),
                    _ => Expr::Cos(arg),
                })
            }
            _ => Err(self.err(&format!("unknown function or variable `{name}`"))),
        }
    }
}
