//! Element-wise expression evaluation with scalar broadcasting.
//!
//! Evaluation follows IEEE-754 semantics (division by zero yields ±inf, log
//! of a negative yields NaN); callers decide how to treat non-finite results.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::formula::ast::{BinOp, Expr};

/// A bound name: a data vector or a broadcast scalar.
#[derive(Debug, Clone, Copy)]
pub enum Binding<'a> {
    Scalar(f64),
    Vector(&'a [f64]),
}

enum Evaluated {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Evaluated {
    fn zip(self, other: Evaluated, op: impl Fn(f64, f64) -> f64) -> Result<Evaluated> {
        Ok(match (self, other) {
            (Evaluated::Scalar(a), Evaluated::Scalar(b)) => Evaluated::Scalar(op(a, b)),
            (Evaluated::Scalar(a), Evaluated::Vector(b)) => {
                Evaluated::Vector(b.into_iter().map(|y| op(a, y)).collect())
            }
            (Evaluated::Vector(a), Evaluated::Scalar(b)) => {
                Evaluated::Vector(a.into_iter().map(|x| op(x, b)).collect())
            }
            (Evaluated::Vector(a), Evaluated::Vector(b)) => {
                if a.len() != b.len() {
                    return Err(Error::Argument(format!(
                        "vector length mismatch: {} vs {}",
                        a.len(),
                        b.len()
                    )));
                }
                Evaluated::Vector(a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect())
            }
        })
    }

    fn map(self, op: impl Fn(f64) -> f64) -> Evaluated {
        match self {
            Evaluated::Scalar(a) => Evaluated::Scalar(op(a)),
            Evaluated::Vector(a) => Evaluated::Vector(a.into_iter().map(op).collect()),
        }
    }
}

fn evaluate(expr: &Expr, bindings: &HashMap<&str, Binding<'_>>) -> Result<Evaluated> {
    Ok(match expr {
        Expr::Number(v) => Evaluated::Scalar(*v),
        Expr::Symbol(name) => match bindings.get(name.as_str()) {
            Some(Binding::Scalar(v)) => Evaluated::Scalar(*v),
            Some(Binding::Vector(v)) => Evaluated::Vector(v.to_vec()),
            None => return Err(Error::Schema(format!("unbound symbol `{name}`"))),
        },
        Expr::Neg(inner) => evaluate(inner, bindings)?.map(|x| -x),
        Expr::Binary { op, lhs, rhs } => {
            let a = evaluate(lhs, bindings)?;
            let b = evaluate(rhs, bindings)?;
            match op {
                BinOp::Add => a.zip(b, |x, y| x + y)?,
                BinOp::Sub => a.zip(b, |x, y| x - y)?,
                BinOp::Mul => a.zip(b, |x, y| x * y)?,
                BinOp::Div => a.zip(b, |x, y| x / y)?,
                BinOp::Pow => a.zip(b, f64::powf)?,
            }
        }
        Expr::Call { func, arg } => evaluate(arg, bindings)?.map(|x| func.apply(x)),
    })
}

/// Evaluates `expr` under `bindings`. A purely scalar expression yields a
/// one-element vector.
pub fn eval_expr(expr: &Expr, bindings: &HashMap<&str, Binding<'_>>) -> Result<Vec<f64>> {
    Ok(match evaluate(expr, bindings)? {
        Evaluated::Scalar(v) => vec![v],
        Evaluated::Vector(v) => v,
    })
}

/// Evaluates `expr` and broadcasts a scalar result to length `n`.
pub fn eval_expr_n(
    expr: &Expr,
    bindings: &HashMap<&str, Binding<'_>>,
    n: usize,
) -> Result<Vec<f64>> {
    Ok(match evaluate(expr, bindings)? {
        Evaluated::Scalar(v) => vec![v; n],
        Evaluated::Vector(v) => {
            if v.len() != n {
                return Err(Error::Argument(format!(
                    "expression evaluated to length {}, expected {n}",
                    v.len()
                )));
            }
            v
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_expr;

    #[test]
    fn reciprocal_model_at_reported_estimates() {
        let expr = parse_expr("k / wt + b").unwrap();
        let mut bindings = HashMap::new();
        bindings.insert("k", Binding::Scalar(45.829));
        bindings.insert("b", Binding::Scalar(4.386));
        let wt = [2.620];
        bindings.insert("wt", Binding::Vector(&wt));
        let out = eval_expr(&expr, &bindings).unwrap();
        assert!((out[0] - 21.877984732824427).abs() < 1e-12);
    }

    #[test]
    fn constants_broadcast_to_binding_length() {
        let expr = parse_expr("7").unwrap();
        let bindings = HashMap::new();
        assert_eq!(eval_expr_n(&expr, &bindings, 3).unwrap(), vec![7.0; 3]);
    }

    #[test]
    fn sqrt_of_four_is_two() {
        let expr = parse_expr("sqrt(4)").unwrap();
        assert_eq!(eval_expr(&expr, &HashMap::new()).unwrap(), vec![2.0]);
    }

    #[test]
    fn ieee_semantics_flow_through() {
        let expr = parse_expr("1 / x").unwrap();
        let x = [0.0];
        let mut bindings = HashMap::new();
        bindings.insert("x", Binding::Vector(&x));
        assert!(eval_expr(&expr, &bindings).unwrap()[0].is_infinite());

        let expr = parse_expr("log(x)").unwrap();
        let x = [-1.0];
        let mut bindings = HashMap::new();
        bindings.insert("x", Binding::Vector(&x));
        assert!(eval_expr(&expr, &bindings).unwrap()[0].is_nan());
    }

    #[test]
    fn unbound_symbol_errors() {
        let expr = parse_expr("a + b").unwrap();
        let mut bindings = HashMap::new();
        bindings.insert("a", Binding::Scalar(1.0));
        assert!(eval_expr(&expr, &bindings).is_err());
    }

    #[test]
    fn mismatched_vector_lengths_error() {
        let expr = parse_expr("a + b").unwrap();
        let a = [1.0, 2.0];
        let b = [1.0, 2.0, 3.0];
        let mut bindings = HashMap::new();
        bindings.insert("a", Binding::Vector(&a));
        bindings.insert("b", Binding::Vector(&b));
        assert!(eval_expr(&expr, &bindings).is_err());
    }
}
