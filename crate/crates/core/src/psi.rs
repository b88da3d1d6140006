//! Closed-form right-hand sides `psi(x1, ..., xn)`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          // right-associative
//! primary := number | variable | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Variables are `x1..xn`; `x`, `y`, `z` alias the first three when `n <= 3`.

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

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
    Log,
}

impl Func {
    const ALL: [Func; 6] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Sqrt,
        Func::Abs,
        Func::Log,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Log => "log",
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    /// Zero-based variable index.
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// Parsed expression together with the number of variables it may use.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiExpr {
    root: Node,
    n_vars: usize,
}

impl PsiExpr {
    pub fn parse(text: &str, n_vars: usize) -> Result<Self> {
        parse(text, n_vars)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        eval(self, point)
    }

    /// `psi` at the origin.
    pub fn at_origin(&self) -> Result<f64> {
        self.eval(&vec![0.0; self.n_vars])
    }
}

impl fmt::Display for Node {
    /// Fully parenthesized form that parses back to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) => write!(f, "{v}"),
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl fmt::Display for PsiExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
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
                let s = &text[start..i];
                let v: f64 = s.parse().map_err(|_| Error::Syntax {
                    offset: start,
                    message: format!("malformed number `{s}`"),
                })?;
                out.push((Tok::Num(v), start));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push((Tok::Op(c as char), start));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, start));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, start));
                i += 1;
            }
            b',' => {
                out.push((Tok::Comma, start));
                i += 1;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    n_vars: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expected(&self, what: &str) -> Error {
        Error::Syntax {
            offset: self.offset(),
            message: format!("expected {what}, found {}", describe(self.peek())),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if let Tok::Op('-') = self.peek() {
            self.bump();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if let Tok::Op('^') = self.peek() {
            self.bump();
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.close_paren()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::lookup(&name) {
                    if *self.peek() != Tok::LParen {
                        return Err(self.expected(&format!("`(` after `{name}`")));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    if *self.peek() == Tok::Comma {
                        return Err(Error::Syntax {
                            offset: self.offset(),
                            message: format!("`{name}` takes exactly one argument"),
                        });
                    }
                    self.close_paren()?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                self.variable(&name, at)
            }
            other => Err(Error::Syntax {
                offset: at,
                message: format!(
                    "expected one of number, variable, function, `(`; found {}",
                    describe(&other)
                ),
            }),
        }
    }

    fn close_paren(&mut self) -> Result<()> {
        if *self.peek() != Tok::RParen {
            return Err(self.expected("`)`"));
        }
        self.bump();
        Ok(())
    }

    fn variable(&self, name: &str, at: usize) -> Result<Node> {
        let index = match name {
            "x" | "y" | "z" if self.n_vars <= 3 => Some(match name {
                "x" => 1,
                "y" => 2,
                _ => 3,
            }),
            _ => name
                .strip_prefix('x')
                .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
                .and_then(|d| d.parse::<usize>().ok()),
        };
        match index {
            Some(i) if i >= 1 && i <= self.n_vars => Ok(Node::Var(i - 1)),
            Some(_) => Err(Error::Syntax {
                offset: at,
                message: format!("unknown variable `{name}` (only {} variables)", self.n_vars),
            }),
            None => Err(Error::Syntax {
                offset: at,
                message: format!("unknown identifier `{name}`"),
            }),
        }
    }
}

/// Parses `text` into an expression over `n_vars` variables.
pub fn parse(text: &str, n_vars: usize) -> Result<PsiExpr> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        n_vars,
    };
    let root = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.expected("operator or end of input"));
    }
    Ok(PsiExpr { root, n_vars })
}

/// Evaluates `expr` at `point`; domain violations and non-finite results are
/// errors naming the offending subexpression.
pub fn eval(expr: &PsiExpr, point: &[f64]) -> Result<f64> {
    if point.len() != expr.n_vars {
        return Err(Error::Dimension {
            expected: expr.n_vars,
            actual: point.len(),
        });
    }
    eval_node(&expr.root, point)
}

fn eval_node(node: &Node, x: &[f64]) -> Result<f64> {
    let fail = |message: &str| Error::Eval {
        node: node.to_string(),
        message: message.into(),
    };
    let v = match node {
        Node::Num(v) => *v,
        Node::Var(i) => x[*i],
        Node::Neg(a) => -eval_node(a, x)?,
        Node::Bin(op, a, b) => {
            let (a, b) = (eval_node(a, x)?, eval_node(b, x)?);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(fail("division by zero"));
                    }
                    a / b
                }
                BinOp::Pow => a.powf(b),
            }
        }
        Node::Call(func, a) => {
            let a = eval_node(a, x)?;
            match func {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Exp => a.exp(),
                Func::Abs => a.abs(),
                Func::Sqrt => {
                    if a < 0.0 {
                        return Err(fail("square root of a negative number"));
                    }
                    a.sqrt()
                }
                Func::Log => {
                    if a <= 0.0 {
                        return Err(fail("logarithm of a nonpositive number"));
                    }
                    a.ln()
                }
            }
        }
    };
    if !v.is_finite() {
        return Err(fail("result is not finite"));
    }
    Ok(v)
}
