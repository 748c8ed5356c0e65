//! Scalar field expressions in `x` and `u`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          // right-associative
//! atom    := number | 'x' | 'u' | func '(' sum ')' | '(' sum ')'
//! func    := sin | cos | exp | log | sqrt | abs | tanh
//! ```
//!
//! `abs` is differentiated as `a / abs(a)`, which is undefined (NaN) at 0.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: {message}")]
    SyntaxError { position: usize, message: String },
    #[error("unknown identifier '{name}' at position {position}")]
    UnknownIdentifier { name: String, position: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Tanh,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Tanh => "tanh",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Tanh => v.tanh(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    U,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        Parser::parse_text(text)
    }

    pub fn eval(&self, x: f64, u: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::U => u,
            Expr::Neg(a) => -a.eval(x, u),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x, u), b.eval(x, u));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => pow(a, b),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(x, u)),
        }
    }

    pub fn depends_on_u(&self) -> bool {
        self.any_node(&|e| matches!(e, Expr::U))
    }

    pub fn depends_on_x(&self) -> bool {
        self.any_node(&|e| matches!(e, Expr::X))
    }

    fn any_node(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        pred(self)
            || match self {
                Expr::Num(_) | Expr::X | Expr::U => false,
                Expr::Neg(a) | Expr::Call(_, a) => a.any_node(pred),
                Expr::Bin(_, a, b) => a.any_node(pred) || b.any_node(pred),
            }
    }

    /// Symbolic partial derivative with respect to `u`, lightly simplified.
    pub fn differentiate_u(&self) -> Expr {
        use Expr::*;
        match self {
            Num(_) | X => Num(0.0),
            U => Num(1.0),
            Neg(a) => neg(a.differentiate_u()),
            Bin(BinOp::Add, a, b) => add(a.differentiate_u(), b.differentiate_u()),
            Bin(BinOp::Sub, a, b) => sub(a.differentiate_u(), b.differentiate_u()),
            Bin(BinOp::Mul, a, b) => add(
                mul(a.differentiate_u(), (**b).clone()),
                mul((**a).clone(), b.differentiate_u()),
            ),
            Bin(BinOp::Div, a, b) => div(
                sub(
                    mul(a.differentiate_u(), (**b).clone()),
                    mul((**a).clone(), b.differentiate_u()),
                ),
                pow_e((**b).clone(), Num(2.0)),
            ),
            Bin(BinOp::Pow, a, b) => {
                let (a, b) = (&**a, &**b);
                if !b.depends_on_u() {
                    // b a^(b-1) a'
                    mul(
                        mul(b.clone(), pow_e(a.clone(), sub(b.clone(), Num(1.0)))),
                        a.differentiate_u(),
                    )
                } else if !a.depends_on_u() {
                    mul(mul(self.clone(), call(Func::Log, a.clone())), b.differentiate_u())
                } else {
                    // a^b (b' ln a + b a' / a)
                    mul(
                        self.clone(),
                        add(
                            mul(b.differentiate_u(), call(Func::Log, a.clone())),
                            div(mul(b.clone(), a.differentiate_u()), a.clone()),
                        ),
                    )
                }
            }
            Call(f, a) => {
                let inner = a.differentiate_u();
                let a = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, a),
                    Func::Cos => neg(call(Func::Sin, a)),
                    Func::Exp => call(Func::Exp, a),
                    Func::Log => div(Num(1.0), a),
                    Func::Sqrt => div(Num(1.0), mul(Num(2.0), call(Func::Sqrt, a))),
                    Func::Abs => div(a.clone(), call(Func::Abs, a)),
                    Func::Tanh => sub(Num(1.0), pow_e(call(Func::Tanh, a), Num(2.0))),
                };
                mul(outer, inner)
            }
        }
    }
}

/// Integer exponents go through `powi` so that negative bases work.
fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

fn is_num(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Num(n) if *n == v)
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(Box::new(a)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        (a, b) if is_num(&a, 0.0) => b,
        (a, b) if is_num(&b, 0.0) => a,
        (a, b) => Expr::Bin(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        (a, b) if is_num(&b, 0.0) => a,
        (a, b) if is_num(&a, 0.0) => neg(b),
        (a, b) => Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        (a, b) if is_num(&a, 0.0) || is_num(&b, 0.0) => Expr::Num(0.0),
        (a, b) if is_num(&a, 1.0) => b,
        (a, b) if is_num(&b, 1.0) => a,
        (a, b) => Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, b) if is_num(&a, 0.0) && !is_num(&b, 0.0) => Expr::Num(0.0),
        (a, b) if is_num(&b, 1.0) => a,
        (a, b) => Expr::Bin(BinOp::Div, Box::new(a), Box::new(b)),
    }
}

fn pow_e(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(pow(x, y)),
        (_, b) if is_num(&b, 0.0) => Expr::Num(1.0),
        (a, b) if is_num(&b, 1.0) => a,
        (a, b) => Expr::Bin(BinOp::Pow, Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(f.apply(v)),
        a => Expr::Call(f, Box::new(a)),
    }
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 => write!(f, "({v})"),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::X => f.write_str("x"),
            Expr::U => f.write_str("u"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {sym} {b})")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn parse_text(text: &str) -> Result<Expr, ParseError> {
        let tokens = tokenize(text).map_err(|position| ParseError::SyntaxError {
            position,
            message: "unexpected character".into(),
        })?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            len: text.chars().count(),
        };
        if parser.tokens.len() == 1 {
            return Err(parser.error("empty expression"));
        }
        let expr = parser.sum()?;
        match parser.peek() {
            Token::End => Ok(expr),
            _ => Err(parser.error("unexpected token")),
        }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn position(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.len, |t| t.1)
    }

    fn error(&self, message: &str) -> ParseError {
        ParseError::SyntaxError {
            position: self.position(),
            message: message.into(),
        }
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].0.clone();
        if t != Token::End {
            self.pos += 1;
        }
        t
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        while let Token::Op(c @ ('+' | '-')) = *self.peek() {
            self.bump();
            let rhs = self.product()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Token::Op(c @ ('*' | '/')) = *self.peek() {
            self.bump();
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Token::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Token::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let start = self.position();
        match self.bump() {
            Token::Num(v) => Ok(Expr::Num(v)),
            Token::LParen => {
                let inner = self.sum()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Token::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::X),
                "u" => Ok(Expr::U),
                _ => {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(ParseError::UnknownIdentifier { name, position: start });
                    };
                    if *self.peek() != Token::LParen {
                        return Err(self.error("expected '(' after function name"));
                    }
                    self.bump();
                    let arg = self.sum()?;
                    self.expect_rparen()?;
                    Ok(Expr::Call(func, Box::new(arg)))
                }
            },
            Token::End => {
                self.pos = self.tokens.len() - 1;
                Err(self.error("unexpected end of input"))
            }
            _ => {
                self.pos -= 1;
                Err(self.error("expected a number, variable, function or '('"))
            }
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Token::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.error("expected ')'"))
        }
    }
}

/// Splits `text` into tokens tagged with their character offset. On failure
/// returns the offset of the offending character.
fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, usize> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let literal: String = chars[start..i].iter().collect();
            let value = literal.parse::<f64>().map_err(|_| start)?;
            out.push((Token::Num(value), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Token::Ident(chars[start..i].iter().collect()), start));
            continue;
        }
        let token = match c {
            '+' | '-' | '*' | '/' | '^' => Token::Op(c),
            // accept the unicode minus sign as '-'
            '\u{2212}' => Token::Op('-'),
            '(' => Token::LParen,
            ')' => Token::RParen,
            _ => return Err(start),
        };
        out.push((token, start));
        i += 1;
    }
    out.push((Token::End, chars.len()));
    Ok(out)
}
