//! Minimal expression grammar for coefficient functions in system files.
//!
//! Grammar (usual precedence, `^` binds tightest and right-associates):
//!   expr   := term (('+' | '-') term)*
//!   term   := factor (('*' | '/') factor)*
//!   factor := unary ('^' factor)?
//!   unary  := '-' unary | primary
//!   primary:= number | ident | ident '(' expr ')' | '(' expr ')'
//! Identifiers: coordinates x (= x1), x1..x9; constants pi, e; functions
//! sin, cos, tan, exp, log, sqrt, abs, tanh. Everything is real-valued.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Coord(usize),
    Unary(fn(f64) -> f64, Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Neg(Box<Node>),
}

/// A parsed, immutable coefficient expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, src };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Config(format!(
                "trailing input in expression {src:?} at token {}",
                p.pos
            )));
        }
        Ok(Expr {
            root,
            source: src.to_string(),
        })
    }

    /// Evaluate at a spatial point; coordinates beyond x.len() are an error.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        eval_node(&self.root, x, &self.source)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

fn eval_node(node: &Node, x: &[f64], src: &str) -> Result<f64> {
    Ok(match node {
        Node::Num(v) => *v,
        Node::Coord(i) => {
            if *i >= x.len() {
                return Err(Error::Config(format!(
                    "expression {src:?} uses x{} but the point has dimension {}",
                    i + 1,
                    x.len()
                )));
            }
            x[*i]
        }
        Node::Unary(f, a) => f(eval_node(a, x, src)?),
        Node::Add(a, b) => eval_node(a, x, src)? + eval_node(b, x, src)?,
        Node::Sub(a, b) => eval_node(a, x, src)? - eval_node(b, x, src)?,
        Node::Mul(a, b) => eval_node(a, x, src)? * eval_node(b, x, src)?,
        Node::Div(a, b) => eval_node(a, x, src)? / eval_node(b, x, src)?,
        Node::Pow(a, b) => eval_node(a, x, src)?.powf(eval_node(b, x, src)?),
        Node::Neg(a) => -eval_node(a, x, src)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_digit() || d == '.' {
                        i += 1;
                    } else if (d == 'e' || d == 'E')
                        && i + 1 < bytes.len()
                        && ((bytes[i + 1] as char).is_ascii_digit()
                            || bytes[i + 1] == b'+'
                            || bytes[i + 1] == b'-')
                    {
                        i += 2;
                    } else {
                        break;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::Config(format!("bad number {text:?} in {src:?}")))?;
                out.push(Tok::Num(v));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_alphanumeric() || d == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push(Tok::Ident(src[start..i].to_string()));
            }
            _ => {
                return Err(Error::Config(format!(
                    "unexpected character {c:?} in expression {src:?}"
                )))
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    pos: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(t) = self.peek() {
            match t {
                Tok::Plus => {
                    self.pos += 1;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.pos += 1;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(t) = self.peek() {
            match t {
                Tok::Star => {
                    self.pos += 1;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.pos += 1;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    // '^' binds tighter than unary minus (-x^2 = -(x^2)) and right-associates;
    // a unary minus is allowed in the exponent (2^-3)
    fn unary(&mut self) -> Result<Node> {
        if let Some(Tok::Minus) = self.peek() {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Node::Num(v)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(Error::Config(format!("missing ')' in {:?}", self.src))),
                }
            }
            Some(Tok::Ident(name)) => self.ident(name),
            other => Err(Error::Config(format!(
                "unexpected token {other:?} in expression {:?}",
                self.src
            ))),
        }
    }

    fn ident(&mut self, name: String) -> Result<Node> {
        if let Some(coord) = coordinate_index(&name) {
            return Ok(Node::Coord(coord));
        }
        match name.as_str() {
            "pi" => return Ok(Node::Num(std::f64::consts::PI)),
            "e" => return Ok(Node::Num(std::f64::consts::E)),
            _ => {}
        }
        let f: fn(f64) -> f64 = match name.as_str() {
            "sin" => f64::sin,
            "cos" => f64::cos,
            "tan" => f64::tan,
            "exp" => f64::exp,
            "log" => f64::ln,
            "sqrt" => f64::sqrt,
            "abs" => f64::abs,
            "tanh" => f64::tanh,
            _ => {
                return Err(Error::Config(format!(
                    "unknown identifier {name:?} in expression {:?}",
                    self.src
                )))
            }
        };
        match self.bump() {
            Some(Tok::LParen) => {}
            _ => {
                return Err(Error::Config(format!(
                    "function {name:?} needs '(' in {:?}",
                    self.src
                )))
            }
        }
        let arg = self.expr()?;
        match self.bump() {
            Some(Tok::RParen) => Ok(Node::Unary(f, Box::new(arg))),
            _ => Err(Error::Config(format!("missing ')' in {:?}", self.src))),
        }
    }
}

fn coordinate_index(name: &str) -> Option<usize> {
    if name == "x" {
        return Some(0);
    }
    let rest = name.strip_prefix('x')?;
    let idx: usize = rest.parse().ok()?;
    if (1..=9).contains(&idx) {
        Some(idx - 1)
    } else {
        None
    }
}
