//! Expression trees for the model mini-language, their printable form, and
//! symbolic differentiation.

use std::fmt;

use crate::error::{Error, Result};

/// Binary operators, in the usual precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// The supported function calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Log,
    Log10,
    Exp,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Log => "log",
            Func::Log10 => "log10",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        match name {
            "log" => Some(Func::Log),
            "log10" => Some(Func::Log10),
            "exp" => Some(Func::Exp),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Func::Log => x.ln(),
            Func::Log10 => x.log10(),
            Func::Exp => x.exp(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

/// Expression AST. Numbers produced by the parser are always non-negative;
/// negation appears as an explicit [`Expr::Neg`] node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Symbol(String),
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        func: Func,
        arg: Box<Expr>,
    },
}

impl Expr {
    pub fn symbol(name: impl Into<String>) -> Expr {
        Expr::Symbol(name.into())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        Expr::Call {
            func,
            arg: Box::new(arg),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Expr::Number(v) if *v == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(self, Expr::Number(v) if *v == 1.0)
    }

    /// The set of symbol names appearing in the tree, in first-appearance order.
    pub fn symbols(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut Vec<String>) {
        match self {
            Expr::Number(_) => {}
            Expr::Symbol(name) => {
                if !out.iter().any(|s| s == name) {
                    out.push(name.clone());
                }
            }
            Expr::Neg(inner) => inner.collect_symbols(out),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.collect_symbols(out);
                rhs.collect_symbols(out);
            }
            Expr::Call { arg, .. } => arg.collect_symbols(out),
        }
    }

    /// Partial derivative with respect to `target`, simplified only by the
    /// 0/1 constant-folding identities (`0 + x -> x`, `1 * x -> x`, ...).
    pub fn differentiate(&self, target: &str) -> Result<Expr> {
        if Func::from_name(target).is_some() {
            return Err(Error::Argument(format!(
                "cannot differentiate with respect to function name `{target}`"
            )));
        }
        self.derivative(target)
    }

    fn derivative(&self, target: &str) -> Result<Expr> {
        Ok(match self {
            Expr::Number(_) => Expr::Number(0.0),
            Expr::Symbol(name) => {
                Expr::Number(if name == target { 1.0 } else { 0.0 })
            }
            Expr::Neg(inner) => fold_neg(inner.derivative(target)?),
            Expr::Binary { op, lhs, rhs } => {
                let du = lhs.derivative(target)?;
                let dv = rhs.derivative(target)?;
                match op {
                    BinOp::Add => fold_add(du, dv),
                    BinOp::Sub => fold_sub(du, dv),
                    BinOp::Mul => fold_add(
                        fold_mul(du, (**rhs).clone()),
                        fold_mul((**lhs).clone(), dv),
                    ),
                    BinOp::Div => {
                        if dv.is_zero() {
                            // Denominator free of the target: (u/v)' = u'/v.
                            fold_div(du, (**rhs).clone())
                        } else {
                            let numerator = fold_sub(
                                fold_mul(du, (**rhs).clone()),
                                fold_mul((**lhs).clone(), dv),
                            );
                            fold_div(
                                numerator,
                                fold_pow((**rhs).clone(), Expr::Number(2.0)),
                            )
                        }
                    }
                    BinOp::Pow => {
                        let Expr::Number(exponent) = **rhs else {
                            return Err(Error::Unsupported(
                                "differentiation of `^` with a non-constant exponent".into(),
                            ));
                        };
                        // d(u^c) = c * u^(c-1) * u'
                        fold_mul(
                            fold_mul(
                                Expr::Number(exponent),
                                fold_pow((**lhs).clone(), Expr::Number(exponent - 1.0)),
                            ),
                            du,
                        )
                    }
                }
            }
            Expr::Call { func, arg } => {
                let darg = arg.derivative(target)?;
                let arg = (**arg).clone();
                match func {
                    Func::Log => fold_div(darg, arg),
                    Func::Log10 => fold_div(
                        darg,
                        fold_mul(Expr::Number(std::f64::consts::LN_10), arg),
                    ),
                    Func::Exp => fold_mul(darg, Expr::call(Func::Exp, arg)),
                    Func::Sqrt => fold_div(
                        darg,
                        fold_mul(Expr::Number(2.0), Expr::call(Func::Sqrt, arg)),
                    ),
                }
            }
        })
    }
}

fn fold_neg(e: Expr) -> Expr {
    if e.is_zero() {
        Expr::Number(0.0)
    } else {
        Expr::Neg(Box::new(e))
    }
}

fn fold_add(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        b
    } else if b.is_zero() {
        a
    } else {
        Expr::binary(BinOp::Add, a, b)
    }
}

fn fold_sub(a: Expr, b: Expr) -> Expr {
    if b.is_zero() {
        a
    } else if a.is_zero() {
        fold_neg(b)
    } else {
        Expr::binary(BinOp::Sub, a, b)
    }
}

fn fold_mul(a: Expr, b: Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        Expr::Number(0.0)
    } else if a.is_one() {
        b
    } else if b.is_one() {
        a
    } else {
        Expr::binary(BinOp::Mul, a, b)
    }
}

fn fold_div(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        Expr::Number(0.0)
    } else if b.is_one() {
        a
    } else {
        Expr::binary(BinOp::Div, a, b)
    }
}

fn fold_pow(base: Expr, exponent: Expr) -> Expr {
    if exponent.is_one() {
        base
    } else if exponent.is_zero() {
        Expr::Number(1.0)
    } else {
        Expr::binary(BinOp::Pow, base, exponent)
    }
}

// Printing precedence levels; `PRIMARY` children must be parenthesized
// anywhere the grammar demands a primary (negation bodies, `^` operands).
const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_POW: u8 = 3;
const PREC_PRIMARY: u8 = 4;

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary { op: BinOp::Add | BinOp::Sub, .. } => PREC_ADD,
            Expr::Binary { op: BinOp::Mul | BinOp::Div, .. } => PREC_MUL,
            Expr::Binary { op: BinOp::Pow, .. } => PREC_POW,
            Expr::Neg(_) => PREC_PRIMARY,
            Expr::Number(_) | Expr::Symbol(_) | Expr::Call { .. } => PREC_PRIMARY,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let prec = self.precedence();
        let parens = prec < min_prec;
        if parens {
            write!(f, "(")?;
        }
        match self {
            Expr::Number(v) => write!(f, "{v}")?,
            Expr::Symbol(name) => write!(f, "{name}")?,
            Expr::Neg(inner) => {
                write!(f, "-")?;
                inner.write(f, PREC_PRIMARY)?;
            }
            Expr::Binary { op, lhs, rhs } => match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                    lhs.write(f, prec)?;
                    write!(f, " {} ", op.symbol())?;
                    rhs.write(f, prec + 1)?;
                }
                BinOp::Pow => {
                    lhs.write(f, PREC_PRIMARY)?;
                    write!(f, "^")?;
                    rhs.write(f, PREC_PRIMARY)?;
                }
            },
            Expr::Call { func, arg } => {
                write!(f, "{}(", func.name())?;
                arg.write(f, 0)?;
                write!(f, ")")?;
            }
        }
        if parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}
