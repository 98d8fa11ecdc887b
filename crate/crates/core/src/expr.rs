//! Differentiable closed-form expressions over named coordinates.
//!
//! Grammar (usual precedence, `^` binds tightest and is right-associative):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Functions: `exp log ln sin cos tan sinh cosh tanh sqrt pow(a, b)`.
//! Constants: `pi`, `e`. Non-smooth functions such as `abs` are rejected.

use thiserror::Error;

use crate::ad::{Scalar, Smooth};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("unknown function `{name}` at line {line}, column {column}")]
    UnknownFunction { name: String, line: usize, column: usize },

    #[error("unknown symbol `{name}` at line {line}, column {column}")]
    UnknownSymbol { name: String, line: usize, column: usize },

    #[error("`{name}` is not differentiable and cannot appear in a metric expression")]
    NotDifferentiable { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Sqrt,
}

impl Func {
    fn lookup(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn apply<S: Scalar>(self, x: S) -> S {
        match self {
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.sin() / x.cos(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

const NON_SMOOTH: &[&str] = &["abs", "sign", "sgn", "floor", "ceil", "round", "min", "max", "step", "heaviside"];

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval<S: Scalar>(&self, x: &[S]) -> S {
        match self {
            Node::Num(v) => S::cst(*v),
            Node::Var(i) => x[*i],
            Node::Neg(a) => -a.eval(x),
            Node::Add(a, b) => a.eval(x) + b.eval(x),
            Node::Sub(a, b) => a.eval(x) - b.eval(x),
            Node::Mul(a, b) => a.eval(x) * b.eval(x),
            Node::Div(a, b) => a.eval(x) / b.eval(x),
            Node::Pow(a, b) => match b.as_ref() {
                Node::Num(p) => a.eval(x).powf(*p),
                Node::Neg(inner) if matches!(inner.as_ref(), Node::Num(_)) => {
                    let Node::Num(p) = inner.as_ref() else { unreachable!() };
                    a.eval(x).powf(-p)
                }
                _ => (a.eval(x).ln() * b.eval(x)).exp(),
            },
            Node::Call(f, a) => f.apply(a.eval(x)),
        }
    }
}

/// A parsed expression in the variables `coords`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    source: String,
    coords: Vec<String>,
    root: Node,
}

impl Expression {
    pub fn parse(source: &str, coords: &[String]) -> Result<Self, ExprError> {
        let tokens = lex(source)?;
        let mut p = Parser { tokens, pos: 0, coords, source };
        let root = p.expr()?;
        if let Some(t) = p.tokens.get(p.pos) {
            let (line, column) = line_col(source, t.offset);
            return Err(ExprError::Parse { line, column, message: format!("unexpected `{}`", t.text(source)) });
        }
        Ok(Self { source: source.to_string(), coords: coords.to_vec(), root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.root.eval(x)
    }
}

impl Smooth for Expression {
    fn input_dim(&self) -> usize {
        self.coords.len()
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![self.root.eval(x)]
    }
}

/// Diagonal metric whose entries are expressions.
#[derive(Debug, Clone)]
pub struct DiagonalExprMetric {
    pub entries: Vec<Expression>,
}

impl Smooth for DiagonalExprMetric {
    fn input_dim(&self) -> usize {
        self.entries.len()
    }
    fn output_dim(&self) -> usize {
        self.entries.len().pow(2)
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = self.entries.len();
        let mut g = vec![S::cst(0.0); n * n];
        for (i, e) in self.entries.iter().enumerate() {
            g[i * n + i] = e.root.eval(x);
        }
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(f64),
    Ident,
    Op(char),
}

#[derive(Debug, Clone, Copy)]
struct Token {
    kind: Tok,
    offset: usize,
    len: usize,
}

impl Token {
    fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.offset..self.offset + self.len]
    }
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn lex(src: &str) -> Result<Vec<Token>, ExprError> {
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
            let v = text.parse::<f64>().map_err(|_| {
                let (line, column) = line_col(src, start);
                ExprError::Parse { line, column, message: format!("bad number `{text}`") }
            })?;
            out.push(Token { kind: Tok::Num(v), offset: start, len: i - start });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { kind: Tok::Ident, offset: start, len: i - start });
        } else if "+-*/^(),".contains(c) {
            out.push(Token { kind: Tok::Op(c), offset: i, len: 1 });
            i += 1;
        } else {
            let (line, column) = line_col(src, i);
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(ExprError::Parse { line, column, message: format!("unexpected character `{ch}`") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    coords: &'a [String],
    source: &'a str,
}

impl Parser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos)?.kind {
            Tok::Op(c) => Some(c),
            _ => None,
        }
    }

    fn error_here(&self, message: impl Into<String>) -> ExprError {
        let offset = self.tokens.get(self.pos).map_or(self.source.len(), |t| t.offset);
        let (line, column) = line_col(self.source, offset);
        ExprError::Parse { line, column, message: message.into() }
    }

    fn expect(&mut self, op: char) -> Result<(), ExprError> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error_here(format!("expected `{op}`")))
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' { Node::Add(lhs.into(), rhs.into()) } else { Node::Sub(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { Node::Mul(lhs.into(), rhs.into()) } else { Node::Div(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(Node::Neg(self.unary()?.into()));
        }
        if self.peek_op() == Some('+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(base.into(), exp.into()));
        }
        Ok(base)
    }

    fn args(&mut self) -> Result<Vec<Node>, ExprError> {
        self.expect('(')?;
        let mut out = vec![self.expr()?];
        while self.peek_op() == Some(',') {
            self.pos += 1;
            out.push(self.expr()?);
        }
        self.expect(')')?;
        Ok(out)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let Some(&tok) = self.tokens.get(self.pos) else {
            return Err(self.error_here("unexpected end of expression"));
        };
        match tok.kind {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Tok::Op('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Op(c) => Err(self.error_here(format!("unexpected `{c}`"))),
            Tok::Ident => {
                self.pos += 1;
                let name = tok.text(self.source);
                let (line, column) = line_col(self.source, tok.offset);
                if self.peek_op() == Some('(') {
                    if NON_SMOOTH.contains(&name) {
                        return Err(ExprError::NotDifferentiable { name: name.to_string() });
                    }
                    let mut args = self.args()?;
                    if name == "pow" {
                        if args.len() != 2 {
                            return Err(ExprError::Parse { line, column, message: "pow takes two arguments".into() });
                        }
                        let e = args.pop().expect("two args");
                        let b = args.pop().expect("two args");
                        return Ok(Node::Pow(b.into(), e.into()));
                    }
                    let f = Func::lookup(name)
                        .ok_or_else(|| ExprError::UnknownFunction { name: name.to_string(), line, column })?;
                    if args.len() != 1 {
                        return Err(ExprError::Parse { line, column, message: format!("{name} takes one argument") });
                    }
                    return Ok(Node::Call(f, args.pop().expect("one arg").into()));
                }
                if let Some(i) = self.coords.iter().position(|c| c == name) {
                    return Ok(Node::Var(i));
                }
                match name {
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    "e" => Ok(Node::Num(std::f64::consts::E)),
                    _ if NON_SMOOTH.contains(&name) => Err(ExprError::NotDifferentiable { name: name.to_string() }),
                    _ => Err(ExprError::UnknownSymbol { name: name.to_string(), line, column }),
                }
            }
        }
    }
}
