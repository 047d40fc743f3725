//! Arithmetic expressions in the variables `x` and `w`.
//!
//! Grammar: numbers, `x`, `w`, named constants, `+ - * / ^` (with `^` right
//! associative and binding tighter than unary minus), parentheses and the
//! functions `sin`, `cos`, `exp`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Named constants visible to expressions. `pi` and `e` are always present.
#[derive(Debug, Clone)]
pub struct Constants(BTreeMap<String, f64>);

impl Default for Constants {
    fn default() -> Self {
        let mut m = BTreeMap::new();
        m.insert("pi".to_string(), std::f64::consts::PI);
        m.insert("e".to_string(), std::f64::consts::E);
        Self(m)
    }
}

impl Constants {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    fn names(&self) -> String {
        self.0.keys().cloned().collect::<Vec<_>>().join(", ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Exp,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    X,
    W,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
    /// Only produced by differentiation; not part of the surface grammar.
    Ln(Box<Node>),
}

impl Node {
    fn eval(&self, x: f64, w: f64) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::X => x,
            Node::W => w,
            Node::Neg(a) => -a.eval(x, w),
            Node::Add(a, b) => a.eval(x, w) + b.eval(x, w),
            Node::Sub(a, b) => a.eval(x, w) - b.eval(x, w),
            Node::Mul(a, b) => a.eval(x, w) * b.eval(x, w),
            Node::Div(a, b) => a.eval(x, w) / b.eval(x, w),
            Node::Pow(a, b) => {
                let base = a.eval(x, w);
                match **b {
                    Node::Num(p) if p.fract() == 0.0 && p.abs() <= 64.0 => base.powi(p as i32),
                    _ => base.powf(b.eval(x, w)),
                }
            }
            Node::Ln(a) => a.eval(x, w).ln(),
            Node::Call(f, a) => {
                let v = a.eval(x, w);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                }
            }
        }
    }

    fn uses_w(&self) -> bool {
        match self {
            Node::W => true,
            Node::Num(_) | Node::X => false,
            Node::Neg(a) | Node::Call(_, a) | Node::Ln(a) => a.uses_w(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                a.uses_w() || b.uses_w()
            }
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Node::Num(v) if *v == 0.0)
    }

    /// Symbolic derivative with respect to `w`.
    fn d_dw(&self) -> Node {
        use Node::*;
        let bx = |n: Node| Box::new(n);
        if !self.uses_w() {
            return Num(0.0);
        }
        match self {
            W => Num(1.0),
            Num(_) | X => Num(0.0),
            Neg(a) => simplify(Neg(bx(a.d_dw()))),
            Add(a, b) => simplify(Add(bx(a.d_dw()), bx(b.d_dw()))),
            Sub(a, b) => simplify(Sub(bx(a.d_dw()), bx(b.d_dw()))),
            Mul(a, b) => {
                simplify(Add(bx(simplify(Mul(bx(a.d_dw()), b.clone()))), bx(simplify(Mul(a.clone(), bx(b.d_dw()))))))
            }
            Div(a, b) => {
                // (a'b - ab') / b^2
                let num = simplify(Sub(
                    bx(simplify(Mul(bx(a.d_dw()), b.clone()))),
                    bx(simplify(Mul(a.clone(), bx(b.d_dw())))),
                ));
                simplify(Div(bx(num), bx(Pow(b.clone(), bx(Num(2.0))))))
            }
            Pow(a, b) if !b.uses_w() => {
                // b a^(b-1) a'
                let reduced = Pow(a.clone(), bx(simplify(Sub(b.clone(), bx(Num(1.0))))));
                simplify(Mul(bx(simplify(Mul(b.clone(), bx(reduced)))), bx(a.d_dw())))
            }
            Pow(a, b) => {
                // a^b (b' ln a + b a'/a)
                let term1 = Mul(bx(b.d_dw()), bx(Ln(a.clone())));
                let term2 = Div(bx(Mul(b.clone(), bx(a.d_dw()))), a.clone());
                simplify(Mul(bx(self.clone()), bx(Add(bx(term1), bx(term2)))))
            }
            Ln(a) => simplify(Div(bx(a.d_dw()), a.clone())),
            Call(f, a) => {
                let inner = a.d_dw();
                let outer = match f {
                    Func::Sin => Call(Func::Cos, a.clone()),
                    Func::Cos => Neg(bx(Call(Func::Sin, a.clone()))),
                    Func::Exp => Call(Func::Exp, a.clone()),
                };
                simplify(Mul(bx(outer), bx(inner)))
            }
        }
    }
}

fn simplify(n: Node) -> Node {
    use Node::*;
    match n {
        Add(a, b) if a.is_zero() => *b,
        Add(a, b) if b.is_zero() => *a,
        Sub(a, b) if b.is_zero() => *a,
        Sub(a, b) if a.is_zero() => Neg(b),
        Mul(a, b) if a.is_zero() || b.is_zero() => Num(0.0),
        Mul(a, b) if matches!(*a, Num(v) if v == 1.0) => *b,
        Mul(a, b) if matches!(*b, Num(v) if v == 1.0) => *a,
        Neg(a) if a.is_zero() => Num(0.0),
        Div(a, _) if a.is_zero() => Num(0.0),
        Sub(a, b) => match (&*a, &*b) {
            (Num(p), Num(q)) => Num(p - q),
            _ => Sub(a, b),
        },
        other => other,
    }
}

/// A compiled expression `f(x, w)`.
#[derive(Clone)]
pub struct Expr {
    source: String,
    root: Node,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source && self.root == other.root
    }
}

impl Expr {
    pub fn parse(source: &str, constants: &Constants) -> Result<Self> {
        let tokens = tokenize(source)?;
        let mut p = Parser { tokens, pos: 0, constants };
        let root = p.expr()?;
        if let Some(t) = p.tokens.get(p.pos) {
            return Err(Error::Expression { offset: t.offset, message: format!("unexpected {:?}", t.kind) });
        }
        Ok(Self { source: source.to_string(), root })
    }

    /// The constant expression `value`.
    pub fn constant(value: f64) -> Self {
        Self { source: format!("{value}"), root: Node::Num(value) }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    #[inline]
    pub fn eval(&self, x: f64, w: f64) -> f64 {
        self.root.eval(x, w)
    }

    pub fn uses_w(&self) -> bool {
        self.root.uses_w()
    }

    pub fn derivative_w(&self) -> Self {
        Self { source: format!("d/dw[{}]", self.source), root: self.root.d_dw() }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    offset: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text
                .parse()
                .map_err(|_| Error::Expression { offset: start, message: format!("malformed number '{text}'") })?;
            out.push(Token { kind: TokKind::Num(v), offset: start });
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { kind: TokKind::Ident(src[start..i].to_string()), offset: start });
        } else {
            let kind = match c {
                '+' | '-' | '*' | '/' | '^' => TokKind::Op(c),
                '(' => TokKind::LParen,
                ')' => TokKind::RParen,
                _ => return Err(Error::Expression { offset: start, message: format!("unexpected character '{c}'") }),
            };
            out.push(Token { kind, offset: start });
            i += 1;
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    constants: &'a Constants,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&TokKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or_else(|| self.tokens.last().map_or(0, |t| t.offset + 1), |t| t.offset)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Expression { offset: self.offset(), message: message.into() })
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(TokKind::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(TokKind::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(TokKind::Op('-')) => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(TokKind::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(TokKind::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let Some(tok) = self.peek().cloned() else {
            return self.err("unexpected end of expression");
        };
        self.pos += 1;
        match tok {
            TokKind::Num(v) => Ok(Node::Num(v)),
            TokKind::LParen => {
                let e = self.expr()?;
                if self.peek() != Some(&TokKind::RParen) {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(e)
            }
            TokKind::Ident(name) => {
                let func = match name.as_str() {
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    "exp" => Some(Func::Exp),
                    _ => None,
                };
                if let Some(f) = func {
                    if self.peek() != Some(&TokKind::LParen) {
                        return self.err(format!("expected '(' after {name}"));
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    if self.peek() != Some(&TokKind::RParen) {
                        return self.err("expected ')'");
                    }
                    self.pos += 1;
                    return Ok(Node::Call(f, Box::new(arg)));
                }
                match name.as_str() {
                    "x" => Ok(Node::X),
                    "w" => Ok(Node::W),
                    _ => match self.constants.get(&name) {
                        Some(v) => Ok(Node::Num(v)),
                        None => {
                            self.pos -= 1;
                            self.err(format!(
                                "unknown identifier '{name}' (variables: x, w; functions: sin, cos, exp; constants: {})",
                                self.constants.names()
                            ))
                        }
                    },
                }
            }
            other => {
                self.pos -= 1;
                self.err(format!("unexpected {other:?}"))
            }
        }
    }
}
