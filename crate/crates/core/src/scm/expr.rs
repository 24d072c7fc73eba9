//! Mechanism expressions.
//!
//! Structural equations are drawn from a small closed grammar so that models
//! can be written to and read from configuration files:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! The only functions are `log` and `exp`.

use std::fmt;

use crate::error::{Error, Result};

/// Reference to a variable inside an expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Var {
    /// Unresolved name, as written in the source text.
    Named(String),
    Endogenous(usize),
    Exogenous(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Log(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut parser = Parser {
            src,
            tokens,
            pos: 0,
        };
        let expr = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            return Err(parser.error("trailing input"));
        }
        Ok(expr)
    }

    /// Evaluates the expression given endogenous and exogenous values.
    /// Unresolved names evaluate to NaN.
    pub fn eval(&self, endo: &[f64], exo: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(Var::Endogenous(k)) => endo[*k],
            Expr::Var(Var::Exogenous(k)) => exo[*k],
            Expr::Var(Var::Named(_)) => f64::NAN,
            Expr::Neg(a) => -a.eval(endo, exo),
            Expr::Add(a, b) => a.eval(endo, exo) + b.eval(endo, exo),
            Expr::Sub(a, b) => a.eval(endo, exo) - b.eval(endo, exo),
            Expr::Mul(a, b) => a.eval(endo, exo) * b.eval(endo, exo),
            Expr::Div(a, b) => a.eval(endo, exo) / b.eval(endo, exo),
            Expr::Pow(a, b) => a.eval(endo, exo).powf(b.eval(endo, exo)),
            Expr::Log(a) => a.eval(endo, exo).ln(),
            Expr::Exp(a) => a.eval(endo, exo).exp(),
        }
    }

    /// Replaces every named variable through `lookup`.
    pub fn resolve<F>(&self, lookup: &F) -> Result<Expr>
    where
        F: Fn(&str) -> Option<Var>,
    {
        let rec = |e: &Expr| e.resolve(lookup).map(Box::new);
        Ok(match self {
            Expr::Var(Var::Named(name)) => match lookup(name) {
                Some(v) => Expr::Var(v),
                None => return Err(Error::UnknownNode(name.clone())),
            },
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(rec(a)?),
            Expr::Add(a, b) => Expr::Add(rec(a)?, rec(b)?),
            Expr::Sub(a, b) => Expr::Sub(rec(a)?, rec(b)?),
            Expr::Mul(a, b) => Expr::Mul(rec(a)?, rec(b)?),
            Expr::Div(a, b) => Expr::Div(rec(a)?, rec(b)?),
            Expr::Pow(a, b) => Expr::Pow(rec(a)?, rec(b)?),
            Expr::Log(a) => Expr::Log(rec(a)?),
            Expr::Exp(a) => Expr::Exp(rec(a)?),
        })
    }

    /// Collects every variable referenced by the expression.
    pub fn variables(&self) -> Vec<&Var> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a Var>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => out.push(v),
            Expr::Neg(a) | Expr::Log(a) | Expr::Exp(a) => a.collect(out),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }

    /// Renders the expression using the supplied variable names.
    pub fn render(&self, endo_names: &[String], exo_names: &[String]) -> String {
        let mut out = String::new();
        self.write(&mut out, endo_names, exo_names, 0);
        out
    }

    fn write(&self, out: &mut String, endo: &[String], exo: &[String], parent: u8) {
        let prec = self.precedence();
        let wrap = prec < parent;
        if wrap {
            out.push('(');
        }
        match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    out.push_str(&format!("({c:?})"));
                } else {
                    out.push_str(&format!("{c:?}"));
                }
            }
            Expr::Var(Var::Named(n)) => out.push_str(n),
            Expr::Var(Var::Endogenous(k)) => out.push_str(&endo[*k]),
            Expr::Var(Var::Exogenous(k)) => out.push_str(&exo[*k]),
            Expr::Neg(a) => {
                out.push('-');
                a.write(out, endo, exo, 4);
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.write(out, endo, exo, 1);
                out.push_str(if matches!(self, Expr::Add(..)) { " + " } else { " - " });
                b.write(out, endo, exo, 2);
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.write(out, endo, exo, 2);
                out.push_str(if matches!(self, Expr::Mul(..)) { " * " } else { " / " });
                b.write(out, endo, exo, 3);
            }
            Expr::Pow(a, b) => {
                a.write(out, endo, exo, 5);
                out.push('^');
                b.write(out, endo, exo, 4);
            }
            Expr::Log(a) | Expr::Exp(a) => {
                out.push_str(if matches!(self, Expr::Log(_)) { "log(" } else { "exp(" });
                a.write(out, endo, exo, 0);
                out.push(')');
            }
        }
        if wrap {
            out.push(')');
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            _ => 6,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&[], &[]))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let err = |reason: String| Error::Expression {
        expr: src.to_string(),
        reason,
    };
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text
                .parse::<f64>()
                .map_err(|_| err(format!("bad number `{text}`")))?;
            tokens.push(Token::Num(value));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            tokens.push(Token::Op(c));
            i += 1;
        } else {
            return Err(err(format!("unexpected character `{c}`")));
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, reason: &str) -> Error {
        Error::Expression {
            expr: self.src.to_string(),
            reason: format!("{reason} at token {}", self.pos),
        }
    }

    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect_op(&mut self, op: char) -> Result<()> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{op}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(match self.unary()? {
                Expr::Const(c) => Expr::Const(-c),
                inner => Expr::Neg(Box::new(inner)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.tokens.get(self.pos).cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                if self.peek_op() == Some('(') {
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_op(')')?;
                    match name.as_str() {
                        "log" => Ok(Expr::Log(Box::new(arg))),
                        "exp" => Ok(Expr::Exp(Box::new(arg))),
                        _ => Err(self.error(&format!("unknown function `{name}`"))),
                    }
                } else {
                    Ok(Expr::Var(Var::Named(name)))
                }
            }
            Some(Token::Op('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_op(')')?;
                Ok(inner)
            }
            _ => Err(self.error("unexpected end or operator")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_named(src: &str, vals: &[(&str, f64)]) -> f64 {
        let names: Vec<String> = vals.iter().map(|(n, _)| n.to_string()).collect();
        let values: Vec<f64> = vals.iter().map(|(_, v)| *v).collect();
        let e = Expr::parse(src)
            .unwrap()
            .resolve(&|n: &str| names.iter().position(|m| m == n).map(Var::Exogenous))
            .unwrap();
        e.eval(&[], &values)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval_named("1 + 2 * 3", &[]), 7.0);
        assert_eq!(eval_named("10 - 4 - 3", &[]), 3.0);
        assert_eq!(eval_named("2 ^ 3 ^ 2", &[]), 512.0);
        assert_eq!(eval_named("-2 ^ 2", &[]), -4.0);
        assert_eq!(eval_named("(1 + 2) * 3", &[]), 9.0);
        assert_eq!(eval_named("8 / 4 / 2", &[]), 1.0);
    }

    #[test]
    fn functions_and_variables() {
        let v = eval_named("exp(log(x)) + 2*y - 1e-1", &[("x", 3.0), ("y", 0.5)]);
        assert!((v - 3.9).abs() < 1e-12);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("1 + ").is_err());
        assert!(Expr::parse("sin(x)").is_err());
        assert!(Expr::parse("x $ y").is_err());
        assert!(Expr::parse("(x").is_err());
    }

    #[test]
    fn render_round_trip() {
        for src in ["a + b * c", "(a + b) * c", "-(a - b) ^ 2", "exp(a / (b - 1)) - log(c)", "a - (b - c)", "2 * a ^ -1"] {
            let e = Expr::parse(src).unwrap();
            let text = e.to_string();
            assert_eq!(Expr::parse(&text).unwrap(), e, "{src} -> {text}");
        }
    }

    #[test]
    fn unknown_name_is_reported() {
        let e = Expr::parse("a + zz").unwrap();
        let r = e.resolve(&|n: &str| (n == "a").then_some(Var::Exogenous(0)));
        assert!(matches!(r, Err(Error::UnknownNode(n)) if n == "zz"));
    }
}
