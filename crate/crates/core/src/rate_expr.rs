//! A small expression language for rate sequences indexed by the state `n`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          // right-associative
//! primary := number | 'n' | call | '(' expr ')'
//! call    := ('exp' | 'log' | 'sqrt') '(' expr ')'
//!          | ('min' | 'max') '(' expr ',' expr ')'
//! number  := digits ('.' digits)? (('e' | 'E') ('+' | '-')? digits)?
//! ```
//!
//! `log` is the natural logarithm. Whitespace is insignificant and there is no
//! implicit multiplication: `2n` is rejected. Literals keep their source text
//! and are rounded to the evaluation context when evaluated, so one parse can
//! serve every precision.

use std::fmt;

use thiserror::Error;

use crate::arithmetic::{ArithmeticError, Real, RealContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Function {
    Exp,
    Log,
    Sqrt,
    Min,
    Max,
}

impl Function {
    fn from_name(name: &str) -> Option<Function> {
        Some(match name {
            "exp" => Function::Exp,
            "log" => Function::Log,
            "sqrt" => Function::Sqrt,
            "min" => Function::Min,
            "max" => Function::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Function::Exp => "exp",
            Function::Log => "log",
            Function::Sqrt => "sqrt",
            Function::Min => "min",
            Function::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Function::Min | Function::Max => 2,
            Function::Exp | Function::Log | Function::Sqrt => 1,
        }
    }
}

/// Parsed rate expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RateExpr {
    /// Decimal literal, kept as written.
    Number(String),
    /// The state index `n`.
    Variable,
    Neg(Box<RateExpr>),
    Binary(BinaryOp, Box<RateExpr>, Box<RateExpr>),
    Call(Function, Vec<RateExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    MalformedNumber,
    UnknownIdentifier(String),
    WrongArity {
        function: &'static str,
        expected: usize,
        found: usize,
    },
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected `{t}`"),
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of input"),
            ParseErrorKind::MalformedNumber => write!(f, "malformed number"),
            ParseErrorKind::UnknownIdentifier(name) => write!(f, "unknown identifier `{name}`"),
            ParseErrorKind::WrongArity {
                function,
                expected,
                found,
            } => write!(
                f,
                "`{function}` takes {expected} argument{}, found {found}",
                if *expected == 1 { "" } else { "s" }
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: {kind}")]
pub struct ParseError {
    /// Byte offset into the source text.
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} in `{node}`")]
pub struct EvalError {
    pub kind: ArithmeticError,
    /// The offending sub-expression, pretty-printed.
    pub node: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(String),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Number(s) | Token::Ident(s) => f.write_str(s),
            Token::Op(c) => write!(f, "{c}"),
            Token::LParen => f.write_str("("),
            Token::RParen => f.write_str(")"),
            Token::Comma => f.write_str(","),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'0'..=b'9' => {
                i = scan_number(bytes, i).ok_or(ParseError {
                    offset: start,
                    kind: ParseErrorKind::MalformedNumber,
                })?;
                tokens.push((start, Token::Number(src[start..i].to_string())));
                continue;
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push((start, Token::Ident(src[start..i].to_string())));
                continue;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => tokens.push((start, Token::Op(c as char))),
            b'(' => tokens.push((start, Token::LParen)),
            b')' => tokens.push((start, Token::RParen)),
            b',' => tokens.push((start, Token::Comma)),
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    offset: start,
                    kind: ParseErrorKind::UnexpectedChar(ch),
                });
            }
        }
        i += 1;
    }
    Ok(tokens)
}

// Returns the end of the literal starting at `i`, or None if it is malformed.
fn scan_number(bytes: &[u8], mut i: usize) -> Option<usize> {
    let digits = |i: &mut usize| {
        let start = *i;
        while *i < bytes.len() && bytes[*i].is_ascii_digit() {
            *i += 1;
        }
        *i > start
    };
    digits(&mut i);
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        if !digits(&mut i) {
            return None;
        }
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        i += 1;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        if !digits(&mut i) {
            return None;
        }
    }
    Some(i)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            offset: self.offset(),
            kind,
        }
    }

    fn unexpected(&self) -> ParseError {
        match self.peek() {
            Some(t) => self.error(ParseErrorKind::UnexpectedToken(t.to_string())),
            None => self.error(ParseErrorKind::UnexpectedEnd),
        }
    }

    fn eat(&mut self, token: &Token) -> bool {
        if self.peek() == Some(token) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &Token) -> Result<(), ParseError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn expr(&mut self) -> Result<RateExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Token::Op('+')) => BinaryOp::Add,
                Some(Token::Op('-')) => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = RateExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<RateExpr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Token::Op('*')) => BinaryOp::Mul,
                Some(Token::Op('/')) => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = RateExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<RateExpr, ParseError> {
        if self.eat(&Token::Op('-')) {
            return Ok(RateExpr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<RateExpr, ParseError> {
        let base = self.primary()?;
        if self.eat(&Token::Op('^')) {
            let exponent = self.unary()?;
            return Ok(RateExpr::Binary(BinaryOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<RateExpr, ParseError> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Token::Number(text)) => {
                self.pos += 1;
                Ok(RateExpr::Number(text))
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                if name == "n" {
                    return Ok(RateExpr::Variable);
                }
                let function = Function::from_name(&name).ok_or(ParseError {
                    offset,
                    kind: ParseErrorKind::UnknownIdentifier(name),
                })?;
                self.call(function, offset)
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(&Token::RParen)?;
                Ok(inner)
            }
            _ => Err(self.unexpected()),
        }
    }

    fn call(&mut self, function: Function, offset: usize) -> Result<RateExpr, ParseError> {
        self.expect(&Token::LParen)?;
        let mut args = vec![self.expr()?];
        while self.eat(&Token::Comma) {
            args.push(self.expr()?);
        }
        self.expect(&Token::RParen)?;
        if args.len() != function.arity() {
            return Err(ParseError {
                offset,
                kind: ParseErrorKind::WrongArity {
                    function: function.name(),
                    expected: function.arity(),
                    found: args.len(),
                },
            });
        }
        Ok(RateExpr::Call(function, args))
    }
}

/// Parses `text` into an expression tree.
pub fn parse(text: &str) -> Result<RateExpr, ParseError> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        pos: 0,
        end: text.len(),
    };
    let expr = parser.expr()?;
    if parser.peek().is_some() {
        return Err(parser.unexpected());
    }
    Ok(expr)
}

/// Evaluates `expr` at state `n` under `ctx`.
pub fn eval(expr: &RateExpr, n: u64, ctx: &RealContext) -> Result<Real, EvalError> {
    expr.eval(n, ctx)
}

impl RateExpr {
    pub fn eval(&self, n: u64, ctx: &RealContext) -> Result<Real, EvalError> {
        let fail = |kind| EvalError {
            kind,
            node: self.to_string(),
        };
        let value = match self {
            RateExpr::Number(text) => ctx.parse_decimal(text).map_err(fail)?,
            RateExpr::Variable => ctx.from_u64(n),
            RateExpr::Neg(inner) => -inner.eval(n, ctx)?,
            RateExpr::Binary(op, lhs, rhs) => {
                let a = lhs.eval(n, ctx)?;
                let b = rhs.eval(n, ctx)?;
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => a.checked_div(&b).map_err(fail)?,
                    BinaryOp::Pow => a.pow(&b).map_err(fail)?,
                }
            }
            RateExpr::Call(function, args) => {
                let x = args[0].eval(n, ctx)?;
                match function {
                    Function::Exp => x.exp().map_err(fail)?,
                    Function::Log => x.ln().map_err(fail)?,
                    Function::Sqrt => x.sqrt().map_err(fail)?,
                    Function::Min => x.min(args[1].eval(n, ctx)?),
                    Function::Max => x.max(args[1].eval(n, ctx)?),
                }
            }
        };
        value.ensure_finite().map_err(fail)
    }
}

/// Fully parenthesized rendering; reparses to the same tree.
impl fmt::Display for RateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateExpr::Number(text) => f.write_str(text),
            RateExpr::Variable => f.write_str("n"),
            RateExpr::Neg(inner) => write!(f, "(-{inner})"),
            RateExpr::Binary(op, lhs, rhs) => write!(f, "({lhs} {} {rhs})", op.symbol()),
            RateExpr::Call(function, args) => {
                write!(f, "{}(", function.name())?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{arg}")?;
                }
                f.write_str(")")
            }
        }
    }
}
