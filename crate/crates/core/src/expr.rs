//! Polynomial expression language for the coupling nonlinearity `f(u, v)`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary ('*' product)?
//! unary   := '-' unary | power
//! power   := atom ('^' integer)?
//! atom    := number | 'u' | 'v' | '(' sum ')'
//! ```
//!
//! Only polynomials are expressible, so every accepted `f` is smooth with
//! bounded derivatives on any bounded box.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{name}` at byte {pos} (only `u` and `v` are allowed)")]
    UnknownSymbol { name: String, pos: usize },
    #[error("f(0, 0) = {value}, but the nonlinearity must vanish at the origin")]
    NonzeroAtOrigin { value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    U,
    V,
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Pow(Box<Node>, u32),
}

impl Node {
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::U => u,
            Node::V => v,
            Node::Add(l, r) => l.eval(u, v) + r.eval(u, v),
            Node::Sub(l, r) => l.eval(u, v) - r.eval(u, v),
            Node::Mul(l, r) => l.eval(u, v) * r.eval(u, v),
            Node::Neg(x) => -x.eval(u, v),
            Node::Pow(x, n) => pow_u32(x.eval(u, v), *n),
        }
    }

    /// True when the tree contains no variable with a nonzero coefficient
    /// path, i.e. it is built only from constants.
    fn is_constant(&self) -> bool {
        match self {
            Node::Const(_) => true,
            Node::U | Node::V => false,
            Node::Add(l, r) | Node::Sub(l, r) => l.is_constant() && r.is_constant(),
            Node::Mul(l, r) => {
                l.is_constant() && r.is_constant()
                    || matches!(**l, Node::Const(c) if c == 0.0)
                    || matches!(**r, Node::Const(c) if c == 0.0)
            }
            Node::Neg(x) => x.is_constant(),
            Node::Pow(x, n) => *n == 0 || x.is_constant(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Node::Add(..) | Node::Sub(..) => 1,
            Node::Mul(..) => 2,
            Node::Neg(_) => 3,
            Node::Pow(..) => 4,
            Node::Const(c) if c.is_sign_negative() => 3,
            _ => 5,
        }
    }
}

/// Exponentiation by squaring; exact for integer inputs while representable.
fn pow_u32(mut base: f64, mut exp: u32) -> f64 {
    let mut acc = 1.0;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        base *= base;
        exp >>= 1;
    }
    acc
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Node, min_prec: u8) -> fmt::Result {
    if child.precedence() < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{:?}` keeps a decimal point and round-trips every finite f64.
            Node::Const(c) => write!(f, "{c:?}"),
            Node::U => f.write_str("u"),
            Node::V => f.write_str("v"),
            Node::Add(l, r) => {
                write_child(f, l, 1)?;
                f.write_str(" + ")?;
                write_child(f, r, 2)
            }
            Node::Sub(l, r) => {
                write_child(f, l, 1)?;
                f.write_str(" - ")?;
                write_child(f, r, 2)
            }
            Node::Mul(l, r) => {
                write_child(f, l, 3)?;
                f.write_str("*")?;
                write_child(f, r, 2)
            }
            Node::Neg(x) => {
                f.write_str("-")?;
                write_child(f, x, 3)
            }
            Node::Pow(x, n) => {
                write_child(f, x, 5)?;
                write!(f, "^{n}")
            }
        }
    }
}

/// A parsed nonlinearity with `f(0, 0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxExpr {
    ast: Node,
    source: String,
}

impl FluxExpr {
    pub fn ast(&self) -> &Node {
        &self.ast
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    #[inline]
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        self.ast.eval(u, v)
    }

    /// `f` is identically zero (e.g. the source was `"0"` or `"0*u"`).
    pub fn is_zero(&self) -> bool {
        self.ast.is_constant()
    }

    pub fn zero() -> Self {
        Self {
            ast: Node::Const(0.0),
            source: "0".to_owned(),
        }
    }
}

impl fmt::Display for FluxExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.ast)
    }
}

pub fn eval_flux(f: &FluxExpr, u: f64, v: f64) -> f64 {
    f.eval(u, v)
}

/// Expands the configuration shortcuts `bilinear` and `quadratic`.
pub fn resolve_alias(source: &str) -> &str {
    match source.trim() {
        "bilinear" => "u*v",
        "quadratic" => "u^2",
        "zero" => "0",
        _ => source,
    }
}

pub fn parse_flux(source: &str) -> Result<FluxExpr, ExprError> {
    let tokens = lex(source)?;
    let mut parser = Parser {
        tokens: &tokens,
        pos: 0,
        end: source.len(),
    };
    let ast = parser.sum()?;
    if let Some(tok) = parser.peek() {
        return Err(ExprError::Syntax {
            pos: tok.pos,
            msg: format!("unexpected {}", tok.kind.describe()),
        });
    }
    let value = ast.eval(0.0, 0.0);
    if value != 0.0 {
        return Err(ExprError::NonzeroAtOrigin { value });
    }
    Ok(FluxExpr {
        ast,
        source: source.to_owned(),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64, bool),
    U,
    V,
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(x, _) => format!("number {x}"),
            TokenKind::U => "`u`".into(),
            TokenKind::V => "`v`".into(),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Caret => "`^`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    pos: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let pos = i;
        let simple = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(TokenKind::Plus),
            b'-' => Some(TokenKind::Minus),
            b'*' => Some(TokenKind::Star),
            b'^' => Some(TokenKind::Caret),
            b'(' => Some(TokenKind::LParen),
            b')' => Some(TokenKind::RParen),
            _ => None,
        };
        if let Some(kind) = simple {
            out.push(Token { kind, pos });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            let mut j = i;
            let mut integral = true;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            if j < bytes.len() && bytes[j] == b'.' {
                integral = false;
                j += 1;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
            }
            if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                let mut k = j + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    integral = false;
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    j = k;
                }
            }
            let text = &src[i..j];
            let value: f64 = text.parse().map_err(|_| ExprError::Syntax {
                pos,
                msg: format!("malformed number `{text}`"),
            })?;
            if !value.is_finite() {
                return Err(ExprError::Syntax {
                    pos,
                    msg: format!("number `{text}` is out of range"),
                });
            }
            out.push(Token {
                kind: TokenKind::Number(value, integral),
                pos,
            });
            i = j;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut j = i;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                j += 1;
            }
            let kind = match &src[i..j] {
                "u" => TokenKind::U,
                "v" => TokenKind::V,
                other => {
                    return Err(ExprError::UnknownSymbol {
                        name: other.to_owned(),
                        pos,
                    })
                }
            };
            out.push(Token { kind, pos });
            i = j;
            continue;
        }
        let ch = src[i..].chars().next().unwrap_or('?');
        return Err(ExprError::Syntax {
            pos,
            msg: format!("unexpected character `{ch}`"),
        });
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<&Token> {
        let tok = self.tokens.get(self.pos);
        self.pos += 1;
        tok
    }

    fn eof_error(&self, what: &str) -> ExprError {
        ExprError::Syntax {
            pos: self.end,
            msg: format!("unexpected end of input, expected {what}"),
        }
    }

    fn sum(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.product()?;
        loop {
            match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Plus) => {
                    self.bump();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.product()?));
                }
                Some(TokenKind::Minus) => {
                    self.bump();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.product()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Node, ExprError> {
        let lhs = self.unary()?;
        if let Some(TokenKind::Star) = self.peek().map(|t| &t.kind) {
            self.bump();
            let rhs = self.product()?;
            return Ok(Node::Mul(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if let Some(TokenKind::Minus) = self.peek().map(|t| &t.kind) {
            self.bump();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if let Some(TokenKind::Caret) = self.peek().map(|t| &t.kind) {
            self.bump();
            let tok = self.bump().cloned().ok_or_else(|| self.eof_error("an exponent"))?;
            return match tok.kind {
                TokenKind::Number(x, true) if x <= u32::MAX as f64 => {
                    Ok(Node::Pow(Box::new(base), x as u32))
                }
                _ => Err(ExprError::Syntax {
                    pos: tok.pos,
                    msg: "exponent must be a non-negative integer literal".into(),
                }),
            };
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let tok = self.bump().cloned().ok_or_else(|| self.eof_error("an operand"))?;
        match tok.kind {
            TokenKind::Number(x, _) => Ok(Node::Const(x)),
            TokenKind::U => Ok(Node::U),
            TokenKind::V => Ok(Node::V),
            TokenKind::LParen => {
                let inner = self.sum()?;
                match self.bump() {
                    Some(Token {
                        kind: TokenKind::RParen,
                        ..
                    }) => Ok(inner),
                    Some(t) => Err(ExprError::Syntax {
                        pos: t.pos,
                        msg: format!("expected `)`, found {}", t.kind.describe()),
                    }),
                    None => Err(self.eof_error("`)`")),
                }
            }
            other => Err(ExprError::Syntax {
                pos: tok.pos,
                msg: format!("expected an operand, found {}", other.describe()),
            }),
        }
    }
}
