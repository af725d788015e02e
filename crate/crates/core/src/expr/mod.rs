//! Expression language for objectives and constraints.
//!
//! Expressions are parsed once and are immutable afterwards. Values come from
//! [`evaluate`], exact gradients and Hessians from [`grad_hess`] (forward-mode
//! second-order propagation), and [`fd_grad_hess`] is a central-difference
//! oracle used to cross-check the latter.

mod fd;
mod parser;
mod taylor;

use std::fmt;

use thiserror::Error;

pub use fd::{fd_grad_hess, DEFAULT_FD_STEP};
pub use parser::parse;
pub use taylor::Taylor2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl UnaryOp {
    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }
}

/// Expression tree. Variables are stored zero-based; `x1` is `Var(0)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("variable x{index} at byte {offset} is outside x1..x{n}")]
    VariableIndex { offset: usize, index: usize, n: usize },
    #[error("negative exponent at byte {offset}")]
    NegativeExponent { offset: usize },
    #[error("point has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("domain error in `{node}`: {reason}")]
    Domain { node: String, reason: String },
    #[error("finite-difference step must be positive, got {0}")]
    BadStep(f64),
}

impl Expr {
    /// Highest zero-based variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Unary(_, a) | Expr::Pow(a, _) => a.max_var(),
            Expr::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    fn is_atom(&self) -> bool {
        match self {
            Expr::Var(_) => true,
            Expr::Const(c) => *c >= 0.0,
            Expr::Unary(op, _) => *op != UnaryOp::Neg,
            _ => false,
        }
    }
}

impl fmt::Display for Expr {
    /// Prints a fully parenthesized form that parses back to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "({c:?})"),
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Unary(UnaryOp::Neg, a) => write!(f, "-({a})"),
            Expr::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Pow(a, k) if a.is_atom() => write!(f, "{a}^{k}"),
            Expr::Pow(a, k) => write!(f, "({a})^{k}"),
        }
    }
}

/// Number system an expression tree can be evaluated in.
pub(crate) trait Scalar: Sized {
    fn constant(c: f64, n: usize) -> Self;
    fn variable(i: usize, x: &[f64]) -> Self;
    fn value(&self) -> f64;
    fn add(self, rhs: Self) -> Self;
    fn sub(self, rhs: Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    /// Division; the divisor's value has been checked to be nonzero.
    fn div(self, rhs: Self) -> Self;
    fn neg(self) -> Self;
    /// Applies a smooth scalar function with its first two derivatives at
    /// the current value.
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self;
    /// Whether `sqrt` needs a strictly positive argument (derivatives blow up at 0).
    const STRICT_SQRT: bool;
}

impl Scalar for f64 {
    fn constant(c: f64, _n: usize) -> Self {
        c
    }
    fn variable(i: usize, x: &[f64]) -> Self {
        x[i]
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    fn sub(self, rhs: Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(self, rhs: Self) -> Self {
        self / rhs
    }
    fn neg(self) -> Self {
        -self
    }
    fn chain(self, f0: f64, _f1: f64, _f2: f64) -> Self {
        f0
    }
    const STRICT_SQRT: bool = false;
}

fn domain(node: &Expr, reason: &str) -> ExprError {
    ExprError::Domain {
        node: node.to_string(),
        reason: reason.to_string(),
    }
}

pub(crate) fn eval_in<S: Scalar>(e: &Expr, x: &[f64]) -> Result<S, ExprError> {
    let n = x.len();
    let out = match e {
        Expr::Const(c) => S::constant(*c, n),
        Expr::Var(i) => {
            if *i >= n {
                return Err(ExprError::Dimension { expected: i + 1, got: n });
            }
            S::variable(*i, x)
        }
        Expr::Binary(op, a, b) => {
            let a = eval_in::<S>(a, x)?;
            let b = eval_in::<S>(b, x)?;
            match op {
                BinaryOp::Add => a.add(b),
                BinaryOp::Sub => a.sub(b),
                BinaryOp::Mul => a.mul(&b),
                BinaryOp::Div => {
                    if b.value() == 0.0 {
                        return Err(domain(e, "division by zero"));
                    }
                    a.div(b)
                }
            }
        }
        Expr::Pow(a, k) => {
            let base = eval_in::<S>(a, x)?;
            let mut acc = S::constant(1.0, n);
            for _ in 0..*k {
                acc = acc.mul(&base);
            }
            acc
        }
        Expr::Unary(op, a) => {
            let a = eval_in::<S>(a, x)?;
            let v = a.value();
            match op {
                UnaryOp::Neg => a.neg(),
                UnaryOp::Sin => a.chain(v.sin(), v.cos(), -v.sin()),
                UnaryOp::Cos => a.chain(v.cos(), -v.sin(), -v.cos()),
                UnaryOp::Exp => {
                    let ev = v.exp();
                    a.chain(ev, ev, ev)
                }
                UnaryOp::Log => {
                    if !(v > 0.0) {
                        return Err(domain(e, "logarithm of a non-positive number"));
                    }
                    a.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
                }
                UnaryOp::Sqrt => {
                    if v < 0.0 || (S::STRICT_SQRT && v == 0.0) {
                        return Err(domain(e, "square root outside its smooth domain"));
                    }
                    let s = v.sqrt();
                    a.chain(s, 0.5 / s, -0.25 / (s * v))
                }
            }
        }
    };
    if !out.value().is_finite() {
        return Err(domain(e, "non-finite value"));
    }
    Ok(out)
}

/// Value of `e` at `x`.
pub fn evaluate(e: &Expr, x: &[f64]) -> Result<f64, ExprError> {
    eval_in::<f64>(e, x)
}

/// Value, gradient and Hessian of `e` at `x`, propagated exactly.
///
/// The value is bit-identical to [`evaluate`]. Square roots must have a strictly
/// positive argument here.
pub fn grad_hess(e: &Expr, x: &[f64]) -> Result<Taylor2, ExprError> {
    eval_in::<Taylor2>(e, x)
}
