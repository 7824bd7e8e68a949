//! Scalar arithmetic expressions over the canonical trajectory vocabulary.
//!
//! Lagrangians, symmetry generators, gauge terms and prehistory functions are
//! all written as [`Expression`]s. Variable names follow a fixed scheme:
//!
//! * `t` is time;
//! * `q{i}_d{k}` is the `k`-th derivative of coordinate `i` at `t`
//!   (`q{i}` is accepted as an alias for `q{i}_d0`);
//! * `q{i}_d{k}_tau` is the same quantity at `t - tau`.
//!
//! Differentiation is exact and symbolic; the result is constant folded and
//! stripped of trivial `0`/`1` factors but otherwise left unsimplified.

mod parser;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

pub use parser::parse;

/// A variable as it appears in an expression.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Time,
    State {
        coord: usize,
        deriv: usize,
        delayed: bool,
    },
    /// Any identifier outside the canonical vocabulary.
    Other(String),
}

impl Symbol {
    pub fn from_name(name: &str) -> Symbol {
        if name == "t" {
            return Symbol::Time;
        }
        Self::parse_state(name).unwrap_or_else(|| Symbol::Other(name.to_string()))
    }

    fn parse_state(name: &str) -> Option<Symbol> {
        let rest = name.strip_prefix('q')?;
        let (rest, delayed) = match rest.strip_suffix("_tau") {
            Some(r) => (r, true),
            None => (rest, false),
        };
        let (coord, deriv) = match rest.split_once("_d") {
            Some((c, d)) => (parse_index(c)?, parse_index(d)?),
            // bare `q{i}` is only an alias for the undelayed value
            None if !delayed => (parse_index(rest)?, 0),
            None => return None,
        };
        Some(Symbol::State {
            coord,
            deriv,
            delayed,
        })
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

fn parse_index(s: &str) -> Option<usize> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    // reject leading zeros so that every state variable has one spelling
    if s.len() > 1 && s.starts_with('0') {
        return None;
    }
    s.parse().ok()
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Time => f.write_str("t"),
            Symbol::State {
                coord,
                deriv,
                delayed,
            } => {
                write!(f, "q{coord}_d{deriv}")?;
                if *delayed {
                    f.write_str("_tau")?;
                }
                Ok(())
            }
            Symbol::Other(name) => f.write_str(name),
        }
    }
}

/// Built-in unary functions. `abs` and friends are deliberately absent so
/// that differentiation stays total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
    ];

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
        }
    }

    fn apply(self, x: f64) -> Option<f64> {
        let y = match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Exp => x.exp(),
            Func::Log if x <= 0.0 => return None,
            Func::Log => x.ln(),
            Func::Sqrt if x < 0.0 => return None,
            Func::Sqrt => x.sqrt(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
        };
        Some(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

/// Parsed expression tree. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Const(f64),
    Var(Symbol),
    Neg(Box<Expression>),
    Unary(Func, Box<Expression>),
    Binary(BinOp, Box<Expression>, Box<Expression>),
}

/// Source of variable values for [`Expression::eval`].
pub trait Bindings {
    fn value(&self, symbol: &Symbol) -> Option<f64>;
}

impl Bindings for HashMap<String, f64> {
    fn value(&self, symbol: &Symbol) -> Option<f64> {
        lookup_by_name(symbol, |name| self.get(name).copied())
    }
}

impl Bindings for BTreeMap<String, f64> {
    fn value(&self, symbol: &Symbol) -> Option<f64> {
        lookup_by_name(symbol, |name| self.get(name).copied())
    }
}

impl<B: Bindings + ?Sized> Bindings for &B {
    fn value(&self, symbol: &Symbol) -> Option<f64> {
        (**self).value(symbol)
    }
}

fn lookup_by_name(symbol: &Symbol, get: impl Fn(&str) -> Option<f64>) -> Option<f64> {
    if let Some(v) = get(&symbol.name()) {
        return Some(v);
    }
    match symbol {
        Symbol::State {
            coord,
            deriv: 0,
            delayed: false,
        } => get(&format!("q{coord}")),
        _ => None,
    }
}

/// Which variables an expression may mention, by owner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vocabulary {
    /// `t`, `q{i}_d{k}` and `q{i}_d{k}_tau` with `i < dim`, `k <= order`.
    Full { dim: usize, order: usize },
    /// `t` and `q{i}` with `i < dim`.
    Generator { dim: usize },
    /// `t` only.
    Time,
}

impl Vocabulary {
    pub fn admits(&self, symbol: &Symbol) -> bool {
        match (self, symbol) {
            (_, Symbol::Time) => true,
            (_, Symbol::Other(_)) => false,
            (Vocabulary::Time, _) => false,
            (Vocabulary::Full { dim, order }, Symbol::State { coord, deriv, .. }) => {
                coord < dim && deriv <= order
            }
            (
                Vocabulary::Generator { dim },
                Symbol::State {
                    coord,
                    deriv,
                    delayed,
                },
            ) => coord < dim && *deriv == 0 && !delayed,
        }
    }
}

impl Expression {
    pub fn constant(c: f64) -> Expression {
        Expression::Const(c)
    }

    pub fn var(name: &str) -> Expression {
        Expression::Var(Symbol::from_name(name))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expression::Const(c) if *c == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expression::Const(c) if *c == 1.0)
    }

    fn as_const(&self) -> Option<f64> {
        match self {
            Expression::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Every distinct variable used, in canonical order.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Expression::Const(_) => {}
            Expression::Var(s) => {
                out.insert(s.clone());
            }
            Expression::Neg(a) | Expression::Unary(_, a) => a.collect_symbols(out),
            Expression::Binary(_, a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
        }
    }

    pub fn depends_on(&self, symbol: &Symbol) -> bool {
        match self {
            Expression::Const(_) => false,
            Expression::Var(s) => s == symbol,
            Expression::Neg(a) | Expression::Unary(_, a) => a.depends_on(symbol),
            Expression::Binary(_, a, b) => a.depends_on(symbol) || b.depends_on(symbol),
        }
    }

    pub fn check_vocabulary(&self, vocabulary: Vocabulary, owner: &str) -> Result<()> {
        match self.symbols().into_iter().find(|s| !vocabulary.admits(s)) {
            Some(s) => Err(Error::Vocabulary {
                name: s.name(),
                owner: owner.to_string(),
            }),
            None => Ok(()),
        }
    }

    pub fn eval<B: Bindings + ?Sized>(&self, bindings: &B) -> Result<f64> {
        match self {
            Expression::Const(c) => Ok(*c),
            Expression::Var(s) => bindings
                .value(s)
                .ok_or_else(|| Error::UnboundVariable(s.name())),
            Expression::Neg(a) => Ok(-a.eval(bindings)?),
            Expression::Unary(f, a) => {
                let x = a.eval(bindings)?;
                match f.apply(x) {
                    Some(y) if !y.is_nan() => Ok(y),
                    _ => Err(self.domain_error(format!("{}({x}) is undefined", f.name()))),
                }
            }
            Expression::Binary(op, a, b) => {
                let x = a.eval(bindings)?;
                let y = b.eval(bindings)?;
                let r = match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(self.domain_error("division by zero".into()));
                        }
                        x / y
                    }
                    BinOp::Pow => power(x, y),
                };
                if r.is_nan() && !x.is_nan() && !y.is_nan() {
                    return Err(self.domain_error(format!("{x}{}{y} is undefined", op.symbol())));
                }
                Ok(r)
            }
        }
    }

    fn domain_error(&self, message: String) -> Error {
        Error::Domain {
            expr: self.to_string(),
            message,
        }
    }

    /// Exact partial derivative with respect to the variable called `var`.
    pub fn diff(&self, var: &str) -> Expression {
        self.diff_symbol(&Symbol::from_name(var))
    }

    pub fn diff_symbol(&self, var: &Symbol) -> Expression {
        match self {
            Expression::Const(_) => Expression::Const(0.0),
            Expression::Var(s) => Expression::Const(if s == var { 1.0 } else { 0.0 }),
            Expression::Neg(a) => neg(a.diff_symbol(var)),
            Expression::Unary(f, a) => {
                let da = a.diff_symbol(var);
                if da.is_zero() {
                    return Expression::Const(0.0);
                }
                let u = (**a).clone();
                let outer = match f {
                    Func::Sin => unary(Func::Cos, u),
                    Func::Cos => neg(unary(Func::Sin, u)),
                    Func::Tan => div(Expression::Const(1.0), pow(unary(Func::Cos, u), Expression::Const(2.0))),
                    Func::Exp => unary(Func::Exp, u),
                    Func::Log => div(Expression::Const(1.0), u),
                    Func::Sqrt => div(Expression::Const(1.0), mul(Expression::Const(2.0), unary(Func::Sqrt, u))),
                    Func::Sinh => unary(Func::Cosh, u),
                    Func::Cosh => unary(Func::Sinh, u),
                    Func::Tanh => sub(Expression::Const(1.0), pow(unary(Func::Tanh, u), Expression::Const(2.0))),
                };
                mul(outer, da)
            }
            Expression::Binary(op, a, b) => {
                let da = a.diff_symbol(var);
                let db = b.diff_symbol(var);
                let (u, v) = ((**a).clone(), (**b).clone());
                match op {
                    BinOp::Add => add(da, db),
                    BinOp::Sub => sub(da, db),
                    BinOp::Mul => add(mul(da, v), mul(u, db)),
                    BinOp::Div => sub(
                        div(da, v.clone()),
                        div(mul(u, db), pow(v, Expression::Const(2.0))),
                    ),
                    BinOp::Pow if db.is_zero() => {
                        // d(u^v) = v u^(v-1) u'
                        let lowered = pow(u, sub(v.clone(), Expression::Const(1.0)));
                        mul(mul(v, lowered), da)
                    }
                    BinOp::Pow => {
                        // d(u^v) = u^v (v' log u + v u' / u)
                        let whole = self.clone();
                        let log_term = mul(db, unary(Func::Log, u.clone()));
                        let base_term = div(mul(v, da), u);
                        mul(whole, add(log_term, base_term))
                    }
                }
            }
        }
    }
}

fn power(x: f64, y: f64) -> f64 {
    if y.fract() == 0.0 && y.abs() <= 64.0 {
        x.powi(y as i32)
    } else {
        x.powf(y)
    }
}

// Smart constructors: constant folding and 0/1 elimination only.

fn fold(value: f64, fallback: impl FnOnce() -> Expression) -> Expression {
    if value.is_finite() {
        Expression::Const(value)
    } else {
        fallback()
    }
}

pub(crate) fn neg(a: Expression) -> Expression {
    match a {
        Expression::Const(c) => Expression::Const(-c),
        Expression::Neg(inner) => *inner,
        other => Expression::Neg(Box::new(other)),
    }
}

pub(crate) fn unary(f: Func, a: Expression) -> Expression {
    if let Some(c) = a.as_const() {
        if let Some(y) = f.apply(c).filter(|y| y.is_finite()) {
            return Expression::Const(y);
        }
    }
    Expression::Unary(f, Box::new(a))
}

fn binary(op: BinOp, a: Expression, b: Expression) -> Expression {
    Expression::Binary(op, Box::new(a), Box::new(b))
}

pub(crate) fn add(a: Expression, b: Expression) -> Expression {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => fold(x + y, || binary(BinOp::Add, a, b)),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => binary(BinOp::Add, a, b),
    }
}

pub(crate) fn sub(a: Expression, b: Expression) -> Expression {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => fold(x - y, || binary(BinOp::Sub, a, b)),
        (Some(0.0), _) => neg(b),
        (_, Some(0.0)) => a,
        _ => binary(BinOp::Sub, a, b),
    }
}

pub(crate) fn mul(a: Expression, b: Expression) -> Expression {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => fold(x * y, || binary(BinOp::Mul, a, b)),
        (Some(0.0), _) | (_, Some(0.0)) => Expression::Const(0.0),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        (Some(-1.0), _) => neg(b),
        (_, Some(-1.0)) => neg(a),
        _ => binary(BinOp::Mul, a, b),
    }
}

pub(crate) fn div(a: Expression, b: Expression) -> Expression {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) if y != 0.0 => fold(x / y, || binary(BinOp::Div, a, b)),
        (Some(0.0), _) => Expression::Const(0.0),
        (_, Some(1.0)) => a,
        _ => binary(BinOp::Div, a, b),
    }
}

pub(crate) fn pow(a: Expression, b: Expression) -> Expression {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => {
            let r = power(x, y);
            if r.is_finite() {
                Expression::Const(r)
            } else {
                binary(BinOp::Pow, a, b)
            }
        }
        (_, Some(0.0)) => Expression::Const(1.0),
        (_, Some(1.0)) => a,
        _ => binary(BinOp::Pow, a, b),
    }
}

// Printing: minimal parentheses under the parser's precedence rules.
// Levels: 1 additive, 2 multiplicative, 3 unary minus, 4 power, 5 atoms.

fn precedence(e: &Expression) -> u8 {
    match e {
        Expression::Const(c) if c.is_sign_negative() => 3,
        Expression::Const(_) | Expression::Var(_) | Expression::Unary(..) => 5,
        Expression::Neg(_) => 3,
        Expression::Binary(op, ..) => op.precedence(),
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expression, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Const(c) => {
                if c.is_finite() {
                    write!(f, "{c}")
                } else if c.is_nan() {
                    f.write_str("(0/0)")
                } else if *c > 0.0 {
                    f.write_str("(1/0)")
                } else {
                    f.write_str("(-1/0)")
                }
            }
            Expression::Var(s) => write!(f, "{s}"),
            Expression::Neg(a) => {
                f.write_str("-")?;
                write_wrapped(f, a, precedence(a) < 3)
            }
            Expression::Unary(func, a) => write!(f, "{}({a})", func.name()),
            Expression::Binary(op, a, b) => {
                let p = op.precedence();
                let (wrap_left, wrap_right) = match op {
                    BinOp::Pow => (precedence(a) <= p, precedence(b) < 3),
                    _ => (precedence(a) < p, precedence(b) <= p),
                };
                write_wrapped(f, a, wrap_left)?;
                f.write_str(op.symbol())?;
                write_wrapped(f, b, wrap_right)
            }
        }
    }
}
