//! Recursive-descent parser for model formulas.
//!
//! Grammar:
//! ```text
//! formula := expr "~" rhs
//! expr    := term (("+" | "-") term)*
//! term    := factor (("*" | "/") factor)*
//! factor  := primary ("^" primary)?
//! primary := number | name | name "(" expr ")" | "(" expr ")" | "-" primary
//! ```
//! Errors carry the byte offset of the offending token.

use crate::error::{Error, Result};
use crate::formula::ast::{BinOp, Expr, Func};
use crate::formula::{Formula, LinearFormula, NlsFormula, Term};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Name(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Tilde,
    // Not part of the grammar; tokenized so `ns(wt, 4)` reaches the
    // dedicated spline-basis error instead of a lexer failure.
    Comma,
}

#[derive(Debug, Clone)]
struct Spanned {
    token: Token,
    offset: usize,
}

fn syntax_error(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Spanned>> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let offset = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
            }
            '+' | '-' | '*' | '/' | '^' | '(' | ')' | '~' | ',' => {
                let token = match c {
                    '+' => Token::Plus,
                    '-' => Token::Minus,
                    '*' => Token::Star,
                    '/' => Token::Slash,
                    '^' => Token::Caret,
                    '(' => Token::LParen,
                    ')' => Token::RParen,
                    ',' => Token::Comma,
                    _ => Token::Tilde,
                };
                tokens.push(Spanned { token, offset });
                i += 1;
            }
            _ if c.is_ascii_digit() || (c == '.' && next_is_digit(bytes, i)) => {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let literal = &text[start..i];
                let value: f64 = literal
                    .parse()
                    .map_err(|_| syntax_error(start, format!("bad number literal `{literal}`")))?;
                tokens.push(Spanned {
                    token: Token::Number(value),
                    offset: start,
                });
            }
            _ if is_name_start(c) => {
                let start = i;
                while i < bytes.len() && is_name_continue(bytes[i] as char) {
                    i += 1;
                }
                tokens.push(Spanned {
                    token: Token::Name(text[start..i].to_string()),
                    offset: start,
                });
            }
            _ => {
                return Err(syntax_error(offset, format!("unexpected character `{c}`")));
            }
        }
    }
    Ok(tokens)
}

fn next_is_digit(bytes: &[u8], i: usize) -> bool {
    bytes.get(i + 1).is_some_and(|b| (*b as char).is_ascii_digit())
}

// R-style names: letters, digits, `_` and `.`, not starting with a digit.
fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '.'
}

fn is_name_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

struct Parser<'a> {
    tokens: &'a [Spanned],
    pos: usize,
    end_offset: usize,
}

impl<'a> Parser<'a> {
    fn new(tokens: &'a [Spanned], end_offset: usize) -> Self {
        Parser {
            tokens,
            pos: 0,
            end_offset,
        }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|s| &s.token)
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map_or(self.end_offset, |s| s.offset)
    }

    fn advance(&mut self) -> Option<&Spanned> {
        let s = self.tokens.get(self.pos);
        self.pos += 1;
        s
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<()> {
        match self.peek() {
            Some(t) if *t == token => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(syntax_error(self.offset(), format!("expected {what}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Token::Plus) => BinOp::Add,
                Some(Token::Minus) => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Token::Star) => BinOp::Mul,
                Some(Token::Slash) => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if matches!(self.peek(), Some(Token::Caret)) {
            self.pos += 1;
            let exponent = self.primary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let offset = self.offset();
        let Some(spanned) = self.advance() else {
            return Err(syntax_error(offset, "unexpected end of input"));
        };
        match &spanned.token {
            Token::Number(v) => Ok(Expr::Number(*v)),
            Token::Name(name) => {
                let name = name.clone();
                if matches!(self.peek(), Some(Token::LParen)) {
                    if name == "ns" {
                        return Err(Error::Unsupported(
                            "spline basis `ns()` terms are out of scope".into(),
                        ));
                    }
                    let func = Func::from_name(&name).ok_or_else(|| {
                        syntax_error(offset, format!("unknown function `{name}`"))
                    })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(Token::RParen, "`)`")?;
                    Ok(Expr::call(func, arg))
                } else {
                    Ok(Expr::symbol(name))
                }
            }
            Token::Minus => Ok(Expr::Neg(Box::new(self.primary()?))),
            Token::LParen => {
                let inner = self.expr()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            other => Err(syntax_error(offset, format!("unexpected token {other:?}"))),
        }
    }

    fn finish(&self) -> Result<()> {
        if self.pos < self.tokens.len() {
            return Err(syntax_error(self.offset(), "trailing input"));
        }
        Ok(())
    }
}

/// Parses a bare expression (no `~`).
pub fn parse_expr(text: &str) -> Result<Expr> {
    let tokens = tokenize(text)?;
    let mut parser = Parser::new(&tokens, text.len());
    let expr = parser.expr()?;
    parser.finish()?;
    Ok(expr)
}

/// Parses a model formula. Without `start` values the right side is split on
/// top-level `+` into linear terms; with them it is kept whole as a nonlinear
/// model over the named parameters.
pub fn parse_formula(text: &str, start: Option<&[(String, f64)]>) -> Result<Formula> {
    let tokens = tokenize(text)?;
    let tilde_positions: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, s)| s.token == Token::Tilde)
        .map(|(i, _)| i)
        .collect();
    if tilde_positions.len() != 1 {
        let offset = tilde_positions
            .get(1)
            .map(|&i| tokens[i].offset)
            .unwrap_or(text.len());
        return Err(syntax_error(
            offset,
            format!("expected exactly one `~`, found {}", tilde_positions.len()),
        ));
    }
    let split = tilde_positions[0];
    let (lhs_tokens, rest) = tokens.split_at(split);
    let rhs_tokens = &rest[1..];

    let mut lhs_parser = Parser::new(lhs_tokens, tokens[split].offset);
    let response = lhs_parser.expr()?;
    lhs_parser.finish()?;

    if rhs_tokens.is_empty() {
        return Err(syntax_error(text.len(), "empty right-hand side"));
    }

    match start {
        None => {
            let terms = split_terms(text, rhs_tokens)?;
            Ok(Formula::Linear(LinearFormula { response, terms }))
        }
        Some(start) => {
            if start.is_empty() {
                return Err(Error::Argument(
                    "nonlinear formulas need at least one start parameter".into(),
                ));
            }
            for (i, (name, value)) in start.iter().enumerate() {
                if !value.is_finite() {
                    return Err(Error::Argument(format!(
                        "start value for `{name}` is not finite"
                    )));
                }
                if start[..i].iter().any(|(other, _)| other == name) {
                    return Err(Error::Argument(format!("duplicate start parameter `{name}`")));
                }
            }
            let mut rhs_parser = Parser::new(rhs_tokens, text.len());
            let rhs = rhs_parser.expr()?;
            rhs_parser.finish()?;
            Ok(Formula::Nls(NlsFormula {
                response,
                rhs,
                parameters: start.to_vec(),
            }))
        }
    }
}

/// Splits the right side on top-level `+` tokens (zero paren depth) and keeps
/// each segment's source text as the term's display name.
fn split_terms(text: &str, tokens: &[Spanned]) -> Result<Vec<Term>> {
    let mut segments: Vec<(usize, usize)> = Vec::new(); // token index ranges
    let mut depth = 0usize;
    let mut seg_start = 0usize;
    for (i, spanned) in tokens.iter().enumerate() {
        match spanned.token {
            Token::LParen => depth += 1,
            Token::RParen => depth = depth.saturating_sub(1),
            Token::Plus if depth == 0 => {
                segments.push((seg_start, i));
                seg_start = i + 1;
            }
            _ => {}
        }
    }
    segments.push((seg_start, tokens.len()));

    let mut terms = Vec::with_capacity(segments.len());
    for (start, end) in segments {
        if start == end {
            let offset = tokens.get(start).map_or(text.len(), |s| s.offset);
            return Err(syntax_error(offset, "empty term"));
        }
        let slice = &tokens[start..end];
        let src_start = slice[0].offset;
        let src_end = tokens
            .get(end)
            .map_or(text.len(), |s| s.offset);
        let mut parser = Parser::new(slice, src_end);
        let expr = parser.expr()?;
        parser.finish()?;
        let name = text[src_start..src_end].trim().to_string();
        terms.push(Term { expr, name });
    }
    Ok(terms)
}
