//! The model mini-language: formula parsing, design-matrix construction,
//! expression evaluation and symbolic differentiation.
//!
//! `response ~ term + term` describes a linear model (the intercept is always
//! included); the same syntax with start values (`mpg ~ k / wt + b` with
//! `k = 1, b = 0`) describes a nonlinear least-squares model whose named
//! parameters are the start keys.

mod ast;
mod eval;
mod parse;

pub use ast::{BinOp, Expr, Func};
pub use eval::{eval_expr, eval_expr_n, Binding};
pub use parse::{parse_expr, parse_formula};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::matrix::Matrix;

/// One right-hand-side term of a linear formula; `name` is the source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub expr: Expr,
    pub name: String,
}

/// A parsed linear model: terms are split on top-level `+` and may only
/// reference data columns. The intercept is implicit and always present.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFormula {
    pub response: Expr,
    pub terms: Vec<Term>,
}

/// A parsed nonlinear model: one right-hand-side expression over data columns
/// and the declared parameters, with their start values in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct NlsFormula {
    pub response: Expr,
    pub rhs: Expr,
    pub parameters: Vec<(String, f64)>,
}

/// Result of [`parse_formula`]: linear without start values, nonlinear with.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Linear(LinearFormula),
    Nls(NlsFormula),
}

/// A materialized regression input: response vector, dense design matrix
/// (column 0 all ones, named `(Intercept)`), and per-column term names.
#[derive(Debug, Clone)]
pub struct Design {
    pub y: Vec<f64>,
    pub x: Matrix,
    pub names: Vec<String>,
}

/// Evaluates a linear formula against a frame. Every symbol must resolve to
/// a numeric, null-free column.
pub fn design_matrix(formula: &LinearFormula, frame: &Frame) -> Result<Design> {
    if frame.n_rows() == 0 {
        return Err(Error::Argument("cannot build a design matrix from 0 rows".into()));
    }
    let mut symbols = formula.response.symbols();
    for term in &formula.terms {
        for s in term.expr.symbols() {
            if !symbols.contains(&s) {
                symbols.push(s);
            }
        }
    }
    let data = bind_columns(frame, &symbols)?;
    let bindings = data_bindings(&data);

    let n = frame.n_rows();
    let y = eval_expr_n(&formula.response, &bindings, n)?;
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(formula.terms.len() + 1);
    let mut names: Vec<String> = Vec::with_capacity(formula.terms.len() + 1);
    columns.push(vec![1.0; n]);
    names.push("(Intercept)".to_string());
    for term in &formula.terms {
        columns.push(eval_expr_n(&term.expr, &bindings, n)?);
        names.push(term.name.clone());
    }
    Ok(Design {
        y,
        x: Matrix::from_columns(&columns)?,
        names,
    })
}

/// Resolves `symbols` to numeric column vectors, rejecting nulls.
pub(crate) fn bind_columns(frame: &Frame, symbols: &[String]) -> Result<Vec<(String, Vec<f64>)>> {
    symbols
        .iter()
        .map(|name| {
            let column = frame
                .column(name)
                .ok_or_else(|| Error::Schema(format!("unresolved symbol `{name}`")))?;
            Ok((name.clone(), column.to_f64_vec()?))
        })
        .collect()
}

pub(crate) fn data_bindings<'a>(
    data: &'a [(String, Vec<f64>)],
) -> HashMap<&'a str, Binding<'a>> {
    data.iter()
        .map(|(name, values)| (name.as_str(), Binding::Vector(values.as_slice())))
        .collect()
}
