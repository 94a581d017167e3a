//! A small grammar for real-valued weights on `ℂ^n`.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'pi' | var | '|' cvar '|' | func '(' expr ')' | '(' expr ')'
//! var     := 'x'k | 'y'k                 real / imaginary part of z_k
//! cvar    := 'z'k | 'w'k
//! func    := 'exp' | 'log' | 'sqrt' | 're' | 'im'   (re/im take a cvar)
//! ```
//!
//! Indices are 1-based. `w_k` names fiber coordinates and is bound after
//! the base coordinates (`w_k` is coordinate `n_base + k`). `log` and
//! `sqrt` of a non-positive (resp. negative) argument evaluate to NaN, which
//! callers report as a non-finite weight.

use crate::error::{Error, Result};
use crate::geometry::weight::Weight;
use crate::linalg::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Z,
    W,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    Re,
    Im,
    Abs,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(Family, usize, Part),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Exp(Box<Node>),
    Log(Box<Node>),
    Sqrt(Box<Node>),
}

/// A parsed, unbound weight expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text
                .parse()
                .map_err(|_| Error::Input(format!("bad number '{text}' at column {}", start + 1)))?;
            out.push((start, Tok::Num(v)));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().filter(|c| **c != '_').collect();
            out.push((start, Tok::Ident(text)));
        } else if "+-*/^()|".contains(ch) {
            out.push((i, Tok::Op(ch)));
            i += 1;
        } else {
            return Err(Error::Input(format!("unexpected character '{ch}' at column {}", i + 1)));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    in_abs: bool,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0 + 1).unwrap_or(0)
    }

    fn err<T>(&self, msg: &str) -> Result<T> {
        if self.pos < self.toks.len() {
            Err(Error::Input(format!("{msg} at column {}", self.column())))
        } else {
            Err(Error::Input(format!("{msg} at end of expression")))
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(&format!("expected '{op}'"))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek() {
            let op = *op;
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
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek() {
            let op = *op;
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
        if self.peek() == Some(&Tok::Op('-')) {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.peek() == Some(&Tok::Op('^')) {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn complex_var(&mut self) -> Result<(Family, usize)> {
        match self.peek().cloned() {
            Some(Tok::Ident(id)) => {
                let family = match id.chars().next() {
                    Some('z') => Family::Z,
                    Some('w') => Family::W,
                    _ => return self.err(&format!("expected complex variable z<k> or w<k>, found '{id}'")),
                };
                let k = parse_index(&id[1..]).ok_or_else(|| {
                    Error::Input(format!("bad variable '{id}' at column {}", self.column()))
                })?;
                self.pos += 1;
                Ok((family, k))
            }
            _ => self.err("expected complex variable"),
        }
    }

    fn primary(&mut self) -> Result<Node> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Const(v))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let saved = self.in_abs;
                self.in_abs = false;
                let e = self.expr()?;
                self.in_abs = saved;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Op('|')) if !self.in_abs => {
                self.pos += 1;
                self.in_abs = true;
                let (fam, k) = self.complex_var()?;
                self.in_abs = false;
                self.expect('|')?;
                Ok(Node::Var(fam, k, Part::Abs))
            }
            Some(Tok::Ident(id)) => {
                self.pos += 1;
                match id.as_str() {
                    "pi" => Ok(Node::Const(std::f64::consts::PI)),
                    "exp" | "log" | "sqrt" => {
                        self.expect('(')?;
                        let saved = self.in_abs;
                        self.in_abs = false;
                        let arg = Box::new(self.expr()?);
                        self.in_abs = saved;
                        self.expect(')')?;
                        Ok(match id.as_str() {
                            "exp" => Node::Exp(arg),
                            "log" => Node::Log(arg),
                            _ => Node::Sqrt(arg),
                        })
                    }
                    "re" | "im" => {
                        self.expect('(')?;
                        let (fam, k) = self.complex_var()?;
                        self.expect(')')?;
                        Ok(Node::Var(fam, k, if id == "re" { Part::Re } else { Part::Im }))
                    }
                    _ => {
                        let part = match id.chars().next() {
                            Some('x') => Part::Re,
                            Some('y') => Part::Im,
                            _ => {
                                self.pos -= 1;
                                return self.err(&format!("unknown identifier '{id}'"));
                            }
                        };
                        match parse_index(&id[1..]) {
                            Some(k) => Ok(Node::Var(Family::Z, k, part)),
                            None => {
                                self.pos -= 1;
                                self.err(&format!("unknown identifier '{id}'"))
                            }
                        }
                    }
                }
            }
            Some(_) => self.err("unexpected token"),
            None => self.err("unexpected end of expression"),
        }
    }
}

fn parse_index(s: &str) -> Option<usize> {
    let k: usize = s.parse().ok()?;
    (k >= 1).then_some(k)
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let toks = tokenize(source)?;
        if toks.is_empty() {
            return Err(Error::Input("empty weight expression".into()));
        }
        let mut p = Parser {
            toks: &toks,
            pos: 0,
            in_abs: false,
        };
        let root = p.expr()?;
        if p.pos != toks.len() {
            return p.err("trailing input");
        }
        Ok(Self {
            source: source.to_string(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Highest 1-based index used for each family `(z, w)`.
    pub fn max_indices(&self) -> (usize, usize) {
        fn walk(n: &Node, acc: &mut (usize, usize)) {
            match n {
                Node::Const(_) => {}
                Node::Var(Family::Z, k, _) => acc.0 = acc.0.max(*k),
                Node::Var(Family::W, k, _) => acc.1 = acc.1.max(*k),
                Node::Neg(a) | Node::Exp(a) | Node::Log(a) | Node::Sqrt(a) => walk(a, acc),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                    walk(a, acc);
                    walk(b, acc);
                }
            }
        }
        let mut acc = (0, 0);
        walk(&self.root, &mut acc);
        acc
    }

    /// Binds the expression to `ℂ^{n_base + n_fiber}` and wraps it as a
    /// finite-difference [`Weight`].
    pub fn into_weight(self, n_base: usize, n_fiber: usize) -> Result<Weight> {
        let (zmax, wmax) = self.max_indices();
        if zmax > n_base {
            return Err(Error::Input(format!(
                "expression '{}' uses z{zmax} but the base dimension is {n_base}",
                self.source
            )));
        }
        if wmax > n_fiber {
            return Err(Error::Input(format!(
                "expression '{}' uses w{wmax} but the fiber dimension is {n_fiber}",
                self.source
            )));
        }
        let label = self.source.clone();
        let root = self.root;
        Ok(Weight::new(n_base + n_fiber, label, move |z| eval(&root, z, n_base)))
    }

    pub fn eval(&self, z: &[C64], n_base: usize) -> f64 {
        eval(&self.root, z, n_base)
    }
}

fn eval(n: &Node, z: &[C64], n_base: usize) -> f64 {
    match n {
        Node::Const(v) => *v,
        Node::Var(fam, k, part) => {
            let idx = match fam {
                Family::Z => k - 1,
                Family::W => n_base + k - 1,
            };
            let c = z[idx];
            match part {
                Part::Re => c.re,
                Part::Im => c.im,
                Part::Abs => c.norm(),
            }
        }
        Node::Neg(a) => -eval(a, z, n_base),
        Node::Add(a, b) => eval(a, z, n_base) + eval(b, z, n_base),
        Node::Sub(a, b) => eval(a, z, n_base) - eval(b, z, n_base),
        Node::Mul(a, b) => eval(a, z, n_base) * eval(b, z, n_base),
        Node::Div(a, b) => eval(a, z, n_base) / eval(b, z, n_base),
        Node::Pow(a, b) => {
            let base = eval(a, z, n_base);
            if let Node::Const(e) = **b {
                if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
                    return base.powi(e as i32);
                }
            }
            base.powf(eval(b, z, n_base))
        }
        Node::Exp(a) => eval(a, z, n_base).exp(),
        Node::Log(a) => {
            let v = eval(a, z, n_base);
            if v > 0.0 {
                v.ln()
            } else {
                f64::NAN
            }
        }
        Node::Sqrt(a) => {
            let v = eval(a, z, n_base);
            if v >= 0.0 {
                v.sqrt()
            } else {
                f64::NAN
            }
        }
    }
}

/// Parses and binds a weight on `ℂ^n` in one step.
pub fn parse_weight(source: &str, n: usize) -> Result<Weight> {
    Expr::parse(source)?.into_weight(n, 0)
}
