//! A small expression language for coefficient fields.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := unary ('^' unary)*
//! unary  := '-' unary | atom
//! atom   := number | 't' | 'x' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
//! func   := 'sin' | 'cos' | 'exp' | 'abs'
//! ```
//!
//! `^` associates to the right. Whitespace is ignored.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Abs => v.abs(),
        }
    }
}

/// Parsed expression tree in the variables `t` and `x`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    T,
    X,
    Pi,
    E,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0, len: src.len() };
        let e = p.expr()?;
        if let Some(tok) = p.peek() {
            return Err(Error::Parse {
                position: tok.pos,
                message: format!("unexpected {:?} after complete expression", tok.kind),
            });
        }
        Ok(e)
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::T => t,
            Expr::X => x,
            Expr::Pi => std::f64::consts::PI,
            Expr::E => std::f64::consts::E,
            Expr::Neg(a) => -a.eval(t, x),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(t, x), b.eval(t, x));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(t, x)),
        }
    }

    /// True when the expression does not mention `x`.
    pub fn is_x_free(&self) -> bool {
        match self {
            Expr::X => false,
            Expr::Num(_) | Expr::T | Expr::Pi | Expr::E => true,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_x_free(),
            Expr::Bin(_, a, b) => a.is_x_free() && b.is_x_free(),
        }
    }
}

impl fmt::Display for Expr {
    // Fully parenthesized so that printing and re-parsing is lossless.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::T => f.write_str("t"),
            Expr::X => f.write_str("x"),
            Expr::Pi => f.write_str("pi"),
            Expr::E => f.write_str("e"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Sym(char),
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    pos: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent only if followed by a digit (after an optional sign),
            // otherwise a trailing `e` is the constant
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
            let v: f64 = text.parse().map_err(|_| Error::Parse {
                position: start,
                message: format!("malformed number '{text}'"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    position: start,
                    message: format!("number '{text}' overflows"),
                });
            }
            out.push(Token { kind: TokKind::Num(v), pos: start });
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Token { kind: TokKind::Ident(src[start..i].to_string()), pos: start });
        } else if "+-*/^()".contains(c) {
            out.push(Token { kind: TokKind::Sym(c), pos: i });
            i += 1;
        } else {
            return Err(Error::Parse { position: i, message: format!("unexpected character '{c}'") });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat_sym(&mut self, s: char) -> bool {
        if matches!(self.peek(), Some(Token { kind: TokKind::Sym(c), .. }) if *c == s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.len, |t| t.pos)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_sym('+') {
                BinOp::Add
            } else if self.eat_sym('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.eat_sym('*') {
                BinOp::Mul
            } else if self.eat_sym('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.unary()?;
        if self.eat_sym('^') {
            let exponent = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_sym('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.here();
        let Some(tok) = self.peek().cloned() else {
            return Err(Error::Parse { position: pos, message: "unexpected end of input".into() });
        };
        self.pos += 1;
        match tok.kind {
            TokKind::Num(v) => Ok(Expr::Num(v)),
            TokKind::Sym('(') => {
                let e = self.expr()?;
                if !self.eat_sym(')') {
                    return Err(Error::Parse { position: self.here(), message: "expected ')'".into() });
                }
                Ok(e)
            }
            TokKind::Sym(c) => Err(Error::Parse { position: pos, message: format!("unexpected '{c}'") }),
            TokKind::Ident(name) => {
                let func = match name.as_str() {
                    "t" => return Ok(Expr::T),
                    "x" => return Ok(Expr::X),
                    "pi" => return Ok(Expr::Pi),
                    "e" => return Ok(Expr::E),
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "exp" => Func::Exp,
                    "abs" => Func::Abs,
                    other => {
                        return Err(Error::Parse {
                            position: pos,
                            message: format!("unknown identifier '{other}'"),
                        })
                    }
                };
                if !self.eat_sym('(') {
                    return Err(Error::Parse {
                        position: self.here(),
                        message: format!("expected '(' after {name}"),
                    });
                }
                let arg = self.expr()?;
                if !self.eat_sym(')') {
                    return Err(Error::Parse { position: self.here(), message: "expected ')'".into() });
                }
                Ok(Expr::Call(func, Box::new(arg)))
            }
        }
    }
}
