//! Scalar coefficient expressions.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := ('-' | '+') unary | power
//! power    := primary ('^' exponent)?
//! exponent := ('-' | '+') exponent | power
//! primary  := number | constant | variable | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus and is right-associative, so
//! `-2^2 = -4` and `2^3^2 = 512`. Variables are `x`, `s` and `t`; constants
//! are `e` and `pi`; functions are `exp`, `log`, `sin`, `cos`, `sqrt`, `abs`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    S,
    T,
}

impl Var {
    pub const ALL: [Var; 3] = [Var::X, Var::S, Var::T];

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::S => "s",
            Var::T => "t",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    E,
    Pi,
}

impl Constant {
    fn value(self) -> f64 {
        match self {
            Constant::E => std::f64::consts::E,
            Constant::Pi => std::f64::consts::PI,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Constant::E => "e",
            Constant::Pi => "pi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
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

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Const(Constant),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at column {}: {message}", .position + 1)]
pub struct ParseError {
    /// Byte offset into the source text.
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no value bound for variable `{0}`")]
    MissingBinding(&'static str),
    #[error("log of non-positive value {0}")]
    LogDomain(f64),
    #[error("sqrt of negative value {0}")]
    SqrtDomain(f64),
    #[error("negative base {base} raised to non-integer power {exponent}")]
    PowDomain { base: f64, exponent: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("expression evaluated to a non-finite value")]
    NonFinite,
}

/// Values for the expression variables. Unset variables are an error when
/// referenced.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bindings([Option<f64>; 3]);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: Var, value: f64) -> Self {
        self.0[var.index()] = Some(value);
        self
    }

    pub fn x(value: f64) -> Self {
        Self::new().with(Var::X, value)
    }

    pub fn t(value: f64) -> Self {
        Self::new().with(Var::T, value)
    }

    pub fn xs(x: f64, s: f64) -> Self {
        Self::new().with(Var::X, x).with(Var::S, s)
    }

    pub fn get(&self, var: Var) -> Option<f64> {
        self.0[var.index()]
    }
}

impl FromIterator<(Var, f64)> for Bindings {
    fn from_iter<I: IntoIterator<Item = (Var, f64)>>(iter: I) -> Self {
        iter.into_iter()
            .fold(Bindings::new(), |b, (var, value)| b.with(var, value))
    }
}

/// Parses `text`, rejecting variables not listed in `allowed`.
pub fn parse_expr(text: &str, allowed: &[Var]) -> Result<Expr, ParseError> {
    let mut parser = Parser {
        src: text,
        tokens: tokenize(text)?,
        pos: 0,
        allowed,
    };
    if parser.tokens.len() == 1 {
        return Err(parser.error_here("empty expression"));
    }
    let expr = parser.expr()?;
    match parser.peek() {
        Tok::End => Ok(expr),
        _ => Err(parser.error_here("unexpected trailing input")),
    }
}

impl FromStr for Expr {
    type Err = ParseError;

    /// Parses with every variable allowed.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s, &Var::ALL)
    }
}

impl Expr {
    pub fn eval(&self, bindings: &Bindings) -> Result<f64, EvalError> {
        let value = match self {
            Expr::Num(v) => *v,
            Expr::Const(c) => c.value(),
            Expr::Var(v) => bindings
                .get(*v)
                .ok_or(EvalError::MissingBinding(v.name()))?,
            Expr::Neg(inner) => -inner.eval(bindings)?,
            Expr::Binary(op, lhs, rhs) => {
                let a = lhs.eval(bindings)?;
                let b = rhs.eval(bindings)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                    BinOp::Pow => pow(a, b)?,
                }
            }
            Expr::Call(func, arg) => {
                let a = arg.eval(bindings)?;
                match func {
                    Func::Exp => a.exp(),
                    Func::Log if a <= 0.0 => return Err(EvalError::LogDomain(a)),
                    Func::Log => a.ln(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Sqrt if a < 0.0 => return Err(EvalError::SqrtDomain(a)),
                    Func::Sqrt => a.sqrt(),
                    Func::Abs => a.abs(),
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// Whether `var` occurs anywhere in the tree.
    pub fn mentions(&self, var: Var) -> bool {
        match self {
            Expr::Var(v) => *v == var,
            Expr::Num(_) | Expr::Const(_) => false,
            Expr::Neg(inner) | Expr::Call(_, inner) => inner.mentions(var),
            Expr::Binary(_, lhs, rhs) => lhs.mentions(var) || rhs.mentions(var),
        }
    }
}

/// Convenience wrapper around [`Expr::eval`].
pub fn eval_expr(ast: &Expr, bindings: &Bindings) -> Result<f64, EvalError> {
    ast.eval(bindings)
}

fn pow(base: f64, exponent: f64) -> Result<f64, EvalError> {
    if base < 0.0 && exponent.fract() != 0.0 {
        return Err(EvalError::PowDomain { base, exponent });
    }
    if base == 0.0 && exponent < 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    Ok(base.powf(exponent))
}

// Fully parenthesized, so the printed form reparses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Const(c) => f.write_str(c.name()),
            Expr::Neg(inner) => write!(f, "(-{inner})"),
            Expr::Binary(op, lhs, rhs) => write!(f, "({lhs} {} {rhs})", op.symbol()),
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
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

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push((Tok::Op(c as char), i));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            b',' => {
                out.push((Tok::Comma, i));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // Exponent part only when followed by digits, so `2*e` keeps `e`
                // as the constant.
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
                let lexeme = &text[start..i];
                let value = lexeme.parse::<f64>().map_err(|_| ParseError {
                    position: start,
                    message: format!("malformed number `{lexeme}`"),
                })?;
                out.push((Tok::Num(value), start));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    position: i,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    allowed: &'a [Var],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn error_here(&self, message: &str) -> ParseError {
        let detail = match self.peek() {
            Tok::End if self.src.trim().is_empty() => String::new(),
            Tok::End => " (at end of input)".to_string(),
            _ => String::new(),
        };
        ParseError {
            position: self.offset(),
            message: format!("{message}{detail}"),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if let Tok::Op('^') = self.peek() {
            self.bump();
            let exponent = self.exponent()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.exponent()?)))
            }
            Tok::Op('+') => {
                self.bump();
                self.exponent()
            }
            _ => self.power(),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_close(at)?;
                Ok(inner)
            }
            Tok::Ident(name) => self.identifier(&name, at),
            Tok::End => Err(ParseError {
                position: at,
                message: "unexpected end of input".into(),
            }),
            other => Err(ParseError {
                position: at,
                message: format!("unexpected {}", describe(&other)),
            }),
        }
    }

    fn identifier(&mut self, name: &str, at: usize) -> Result<Expr, ParseError> {
        if let Some(func) = Func::lookup(name) {
            if !matches!(self.peek(), Tok::LParen) {
                return Err(ParseError {
                    position: at,
                    message: format!("function `{name}` must be called with one argument"),
                });
            }
            let (_, open) = self.bump();
            let arg = self.expr()?;
            if matches!(self.peek(), Tok::Comma) {
                return Err(ParseError {
                    position: self.offset(),
                    message: format!("function `{name}` takes exactly one argument"),
                });
            }
            self.expect_close(open)?;
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        match name {
            "e" => return Ok(Expr::Const(Constant::E)),
            "pi" => return Ok(Expr::Const(Constant::Pi)),
            _ => {}
        }
        match Var::ALL.into_iter().find(|v| v.name() == name) {
            Some(var) if self.allowed.contains(&var) => Ok(Expr::Var(var)),
            Some(_) => Err(ParseError {
                position: at,
                message: format!(
                    "variable `{name}` is not allowed here (allowed: {})",
                    self.allowed_list()
                ),
            }),
            None => Err(ParseError {
                position: at,
                message: format!("unknown identifier `{name}`"),
            }),
        }
    }

    fn expect_close(&mut self, open: usize) -> Result<(), ParseError> {
        match self.peek() {
            Tok::RParen => {
                self.bump();
                Ok(())
            }
            _ => Err(ParseError {
                position: self.offset(),
                message: format!("expected `)` to close `(` at column {}", open + 1),
            }),
        }
    }

    fn allowed_list(&self) -> String {
        if self.allowed.is_empty() {
            return "none".into();
        }
        self.allowed
            .iter()
            .map(|v| v.name())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Op(c) => format!("operator `{c}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval_str(text: &str, b: Bindings) -> f64 {
        parse_expr(text, &Var::ALL).unwrap().eval(&b).unwrap()
    }

    #[test]
    fn mortality_of_second_example() {
        let ast = parse_expr("1/2 + s/(1-exp(-1))", &[Var::S]).unwrap();
        let at = |s: f64| ast.eval(&Bindings::new().with(Var::S, s)).unwrap();
        assert_eq!(at(0.0), 0.5);
        let expected = 0.5 + 0.3 / (1.0 - (-1.0f64).exp());
        assert_eq!(at(0.3), expected);
    }

    #[test]
    fn single_variable() {
        assert_eq!(parse_expr("x", &[Var::X]).unwrap(), Expr::Var(Var::X));
    }

    #[test]
    fn constant_e_not_exponent() {
        let ast = parse_expr("2*e^x", &[Var::X, Var::S]).unwrap();
        assert_eq!(ast.eval(&Bindings::x(0.0)).unwrap(), 2.0);
        assert_eq!(
            ast.eval(&Bindings::x(1.0)).unwrap(),
            2.0 * std::f64::consts::E
        );
        assert_eq!(eval_str("1e-3", Bindings::new()), 1e-3);
        assert_eq!(eval_str("2.5E+2", Bindings::new()), 250.0);
    }

    #[test]
    fn initial_datum_vanishes_at_right_end() {
        let v = eval_str("e - exp(x)", Bindings::x(1.0));
        assert_eq!(v, 0.0);
    }

    #[test]
    fn dirichlet_datum_at_zero() {
        let v = eval_str("exp(-1)/(1+exp(-t))", Bindings::t(0.0));
        assert!((v - 0.183_939_720_585_721_2).abs() < 1e-15);
    }

    #[test]
    fn precedence() {
        let b = Bindings::new();
        assert_eq!(eval_str("2+3*4", b), 14.0);
        assert_eq!(eval_str("2^3^2", b), 512.0);
        assert_eq!(eval_str("-2^2", b), -4.0);
        assert_eq!(eval_str("(-2)^2", b), 4.0);
        assert_eq!(eval_str("2^-1", b), 0.5);
        assert_eq!(eval_str("8/4/2", b), 1.0);
        assert_eq!(eval_str("10-4-3", b), 3.0);
        assert_eq!(eval_str("- -3", b), 3.0);
        assert_eq!(eval_str("2*-3", b), -6.0);
        assert!(
            (eval_str("sin(pi/2) + cos(0) + sqrt(4) + abs(-1) + log(e)", b) - 6.0).abs() < 1e-15
        );
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_expr("1 + q", &[Var::X]).unwrap_err();
        assert_eq!(err.position, 4);
        assert!(err.message.contains("unknown identifier"));

        let err = parse_expr("1 + s", &[Var::X]).unwrap_err();
        assert_eq!(err.position, 4);
        assert!(err.message.contains("not allowed"));

        let err = parse_expr("exp(1, 2)", &Var::ALL).unwrap_err();
        assert!(err.message.contains("exactly one argument"));

        let err = parse_expr("exp 2", &Var::ALL).unwrap_err();
        assert_eq!(err.position, 0);

        let err = parse_expr("(1 + 2", &Var::ALL).unwrap_err();
        assert_eq!(err.position, 6);

        assert!(parse_expr("", &Var::ALL).is_err());
        assert!(parse_expr("   ", &Var::ALL).is_err());
        assert!(parse_expr("1 +", &Var::ALL).is_err());
        assert!(parse_expr("1 2", &Var::ALL).is_err());
        assert!(parse_expr("2 $ 3", &Var::ALL).unwrap_err().position == 2);
        assert!(parse_expr("1..2", &Var::ALL).is_err());
    }

    #[test]
    fn eval_errors() {
        let ast = parse_expr("x + s", &Var::ALL).unwrap();
        assert_eq!(
            ast.eval(&Bindings::x(1.0)),
            Err(EvalError::MissingBinding("s"))
        );
        let b = Bindings::new();
        let err = |t: &str| parse_expr(t, &Var::ALL).unwrap().eval(&b).unwrap_err();
        assert_eq!(err("log(0)"), EvalError::LogDomain(0.0));
        assert_eq!(err("sqrt(-1)"), EvalError::SqrtDomain(-1.0));
        assert!(matches!(err("(-2)^0.5"), EvalError::PowDomain { .. }));
        assert_eq!(err("1/0"), EvalError::DivisionByZero);
        assert_eq!(err("exp(1000)"), EvalError::NonFinite);
        assert_eq!(eval_str("(-2)^3", b), -8.0);
    }

    #[test]
    fn mentions() {
        let ast = parse_expr("1 + sin(x)", &Var::ALL).unwrap();
        assert!(ast.mentions(Var::X));
        assert!(!ast.mentions(Var::S));
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..100.0).prop_map(Expr::Num),
            prop::sample::select(Var::ALL.to_vec()).prop_map(Expr::Var),
            prop::sample::select(vec![Constant::E, Constant::Pi]).prop_map(Expr::Const),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            let ops = vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow];
            let funcs = vec![
                Func::Exp,
                Func::Log,
                Func::Sin,
                Func::Cos,
                Func::Sqrt,
                Func::Abs,
            ];
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (prop::sample::select(ops), inner.clone(), inner.clone())
                    .prop_map(|(op, a, b)| Expr::Binary(op, Box::new(a), Box::new(b))),
                (prop::sample::select(funcs), inner).prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
            ]
        })
    }

    proptest! {
        #[test]
        fn printed_form_reparses(ast in arb_expr()) {
            let printed = ast.to_string();
            let back = parse_expr(&printed, &Var::ALL).unwrap();
            prop_assert_eq!(back, ast);
        }

        #[test]
        fn evaluation_is_deterministic(ast in arb_expr(), x in -2.0f64..2.0, s in -2.0f64..2.0, t in 0.0f64..2.0) {
            let b = Bindings::new().with(Var::X, x).with(Var::S, s).with(Var::T, t);
            let first = ast.eval(&b).map(f64::to_bits);
            let second = ast.eval(&b).map(f64::to_bits);
            prop_assert_eq!(first, second);
        }
    }
}
