//! Arithmetic expressions over `+ - * /` and non-negative integer literals,
//! parsed by recursive descent and evaluated exactly over the rationals.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl Op {
    pub fn symbol(self) -> char {
        match self {
            Op::Add => '+',
            Op::Sub => '-',
            Op::Mul => '*',
            Op::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Num(u64),
    Binary(Op, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn binary(op: Op, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Literals in left-to-right order.
    pub fn literals(&self) -> Vec<u64> {
        let mut out = Vec::new();
        self.collect_literals(&mut out);
        out
    }

    fn collect_literals(&self, out: &mut Vec<u64>) {
        match self {
            Expr::Num(n) => out.push(*n),
            Expr::Binary(_, l, r) => {
                l.collect_literals(out);
                r.collect_literals(out);
            }
        }
    }
}

/// Fully parenthesised except at the top level: `((1*2)*3)*4`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn inner(e: &Expr, f: &mut fmt::Formatter<'_>, top: bool) -> fmt::Result {
            match e {
                Expr::Num(n) => write!(f, "{n}"),
                Expr::Binary(op, l, r) => {
                    if !top {
                        f.write_str("(")?;
                    }
                    inner(l, f, false)?;
                    write!(f, "{}", op.symbol())?;
                    inner(r, f, false)?;
                    if !top {
                        f.write_str(")")?;
                    }
                    Ok(())
                }
            }
        }
        inner(self, f, true)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Num(u64),
    Op(Op),
    Open,
    Close,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '0'..='9' => {
                let start = i;
                let mut value: u64 = 0;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    value = value
                        .checked_mul(10)
                        .and_then(|v| v.checked_add(chars[i].to_digit(10).unwrap() as u64))
                        .ok_or_else(|| ParseError::Syntax {
                            offset: start,
                            message: "number too large".into(),
                        })?;
                    i += 1;
                }
                out.push((start, Tok::Num(value)));
                continue;
            }
            '+' => Tok::Op(Op::Add),
            '-' | '\u{2212}' | '\u{2013}' => Tok::Op(Op::Sub),
            '*' | '\u{00d7}' | '\u{22c5}' => Tok::Op(Op::Mul),
            '/' | '\u{00f7}' => Tok::Op(Op::Div),
            '(' | '[' => Tok::Open,
            ')' | ']' => Tok::Close,
            other => {
                return Err(ParseError::Syntax { offset: i, message: format!("unexpected character {other:?}") })
            }
        };
        out.push((i, tok));
        i += 1;
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
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn error<T>(&self, message: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax { offset: self.offset(), message: message.to_string() })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(op @ (Op::Add | Op::Sub))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while let Some(Tok::Op(op @ (Op::Mul | Op::Div))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Expr::Num(n))
            }
            Some(Tok::Open) => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(Tok::Close) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => self.error("expected ')'"),
                }
            }
            Some(_) => self.error("expected a number or '('"),
            None => self.error("unexpected end of input"),
        }
    }
}

/// Strips a leading `Answer:` marker, a leading `24 =` and a trailing `= 24`.
pub fn strip_prose(text: &str) -> &str {
    let mut s = text.trim();
    if let Some(pos) = s.to_ascii_lowercase().find("answer:") {
        if s[..pos].trim().is_empty() {
            s = s[pos + "answer:".len()..].trim();
        }
    }
    if let Some(rest) = s.strip_prefix("24") {
        if let Some(rest) = rest.trim_start().strip_prefix('=') {
            s = rest.trim();
        }
    }
    if let Some(rest) = s.strip_suffix("24") {
        if let Some(rest) = rest.trim_end().strip_suffix('=') {
            s = rest.trim();
        }
    }
    s
}

/// Parses an arithmetic expression with the usual precedence and left
/// associativity. Offsets in errors are character offsets into the text
/// left after [`strip_prose`].
pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    let body = strip_prose(text);
    let toks = tokenize(body)?;
    if toks.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut parser = Parser { toks, pos: 0, end: body.chars().count() };
    let expr = parser.expr()?;
    if parser.pos != parser.toks.len() {
        return parser.error("unexpected trailing input");
    }
    Ok(expr)
}

pub fn eval_exact(expr: &Expr) -> Result<BigRational, EvalError> {
    match expr {
        Expr::Num(n) => Ok(BigRational::from_integer(BigInt::from(*n))),
        Expr::Binary(op, l, r) => {
            let (a, b) = (eval_exact(l)?, eval_exact(r)?);
            Ok(match op {
                Op::Add => a + b,
                Op::Sub => a - b,
                Op::Mul => a * b,
                Op::Div => {
                    if b.is_zero() {
                        return Err(EvalError::DivisionByZero);
                    }
                    a / b
                }
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn left_associative_product() {
        let e = parse_expression("1*2*3*4").unwrap();
        assert_eq!(e.to_string(), "((1*2)*3)*4");
        assert_eq!(eval_exact(&e).unwrap(), q(24, 1));
    }

    #[test]
    fn precedence_and_parentheses() {
        let e = parse_expression("8/(3-8/3)").unwrap();
        assert_eq!(
            e,
            Expr::binary(
                Op::Div,
                Expr::Num(8),
                Expr::binary(Op::Sub, Expr::Num(3), Expr::binary(Op::Div, Expr::Num(8), Expr::Num(3)))
            )
        );
        // 3 - 8/3 = 1/3, and 8 / (1/3) = 24
        assert_eq!(eval_exact(&e).unwrap(), q(24, 1));
        assert_eq!(parse_expression("1+2*3").unwrap().to_string(), "1+(2*3)");
        assert_eq!(parse_expression("10-4-3").unwrap().to_string(), "(10-4)-3");
    }

    #[test]
    fn syntax_error_reports_offset() {
        assert_eq!(
            parse_expression("(3+)"),
            Err(ParseError::Syntax { offset: 3, message: "expected a number or '('".into() })
        );
        assert!(matches!(parse_expression("(1+2"), Err(ParseError::Syntax { offset: 4, .. })));
        assert!(matches!(parse_expression("1 2"), Err(ParseError::Syntax { offset: 2, .. })));
        assert!(matches!(parse_expression("-1+25"), Err(ParseError::Syntax { offset: 0, .. })));
        assert!(matches!(parse_expression("2^3"), Err(ParseError::Syntax { offset: 1, .. })));
    }

    #[test]
    fn empty_input() {
        assert_eq!(parse_expression(""), Err(ParseError::Empty));
        assert_eq!(parse_expression("  Answer:  "), Err(ParseError::Empty));
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let e = parse_expression("1/(1-1)").unwrap();
        assert_eq!(eval_exact(&e), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn prose_is_stripped() {
        assert_eq!(strip_prose("Answer: (1+2+3)*4"), "(1+2+3)*4");
        assert_eq!(strip_prose("24 = 4*6"), "4*6");
        assert_eq!(strip_prose("(10-4)*(13-9) = 24"), "(10-4)*(13-9)");
        assert_eq!(strip_prose("answer: 24 = 1*2*3*4 = 24"), "1*2*3*4");
        assert_eq!(strip_prose("24"), "24");
    }

    #[test]
    fn unicode_operators() {
        let e = parse_expression("(10 \u{2212} 4) \u{00d7} (13 \u{2212} 9)").unwrap();
        assert_eq!(eval_exact(&e).unwrap(), q(24, 1));
        assert_eq!(parse_expression("8 \u{00f7} 2").unwrap().to_string(), "8/2");
    }

    #[test]
    fn literals_in_order() {
        assert_eq!(parse_expression("(10-4)*(13-9)").unwrap().literals(), vec![10, 4, 13, 9]);
    }
}
