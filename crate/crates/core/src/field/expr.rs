//! Text expressions over `x`, `y`, `z`.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' factor)?
//! atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and unary minus binds looser than `^`, so
//! `-x^2` is `-(x^2)`. Identifiers: `x y z pi tau_golden sqrt abs sin cos
//! min max`.

use std::fmt;

use thiserror::Error;

use super::dual::FieldNum;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {}, found {found}", .expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedConst {
    Pi,
    /// The golden ratio (1 + sqrt 5) / 2.
    TauGolden,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Abs,
    Sin,
    Cos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node<T> {
    Const(T),
    Var(Axis),
    Named(NamedConst),
    Neg(Box<Node<T>>),
    Func(Func, Box<Node<T>>),
    Binary(BinOp, Box<Node<T>>, Box<Node<T>>),
    /// `integer` is set when the exponent is variable-free and integral;
    /// such powers are evaluated by repeated multiplication.
    Pow {
        base: Box<Node<T>>,
        exponent: Box<Node<T>>,
        integer: Option<i32>,
    },
}

/// A parsed expression.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldExpr<T> {
    root: Node<T>,
}

impl<T: Real> FieldExpr<T> {
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        parse_expr(source)
    }

    pub fn from_node(root: Node<T>) -> Self {
        Self { root }
    }

    pub fn root(&self) -> &Node<T> {
        &self.root
    }

    pub fn eval(&self, p: [T; 3]) -> T {
        self.root.eval(&p)
    }

    pub(crate) fn eval_num<N: FieldNum<T>>(&self, p: &[N; 3]) -> N {
        self.root.eval(p)
    }
}

impl<T: Real> Node<T> {
    fn eval<N: FieldNum<T>>(&self, p: &[N; 3]) -> N {
        match self {
            Node::Const(c) => N::constant(*c),
            Node::Var(Axis::X) => p[0],
            Node::Var(Axis::Y) => p[1],
            Node::Var(Axis::Z) => p[2],
            Node::Named(NamedConst::Pi) => N::constant(T::PI()),
            Node::Named(NamedConst::TauGolden) => N::constant(tau_golden()),
            Node::Neg(a) => -a.eval(p),
            Node::Func(f, a) => {
                let a = a.eval(p);
                match f {
                    Func::Sqrt => a.sqrt(),
                    Func::Abs => a.abs(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                }
            }
            Node::Binary(op, a, b) => {
                let (a, b) = (a.eval(p), b.eval(p));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Min => a.min_of(b),
                    BinOp::Max => a.max_of(b),
                }
            }
            Node::Pow {
                base,
                exponent,
                integer,
            } => {
                let b = base.eval(p);
                match integer {
                    Some(n) => b.powi(*n),
                    None => b.powf(exponent.eval(p)),
                }
            }
        }
    }

    fn has_variables(&self) -> bool {
        match self {
            Node::Var(_) => true,
            Node::Const(_) | Node::Named(_) => false,
            Node::Neg(a) | Node::Func(_, a) => a.has_variables(),
            Node::Binary(_, a, b) => a.has_variables() || b.has_variables(),
            Node::Pow { base, exponent, .. } => base.has_variables() || exponent.has_variables(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Node::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Node::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Node::Neg(_) => 3,
            Node::Pow { .. } => 4,
            Node::Const(c) if c.is_sign_negative() => 3,
            _ => 5,
        }
    }

    fn pow(base: Node<T>, exponent: Node<T>) -> Self {
        let integer = if exponent.has_variables() {
            None
        } else {
            let v: T = exponent.eval(&[T::zero(); 3]);
            let fits = v.is_finite() && v.fract() == T::zero() && v.abs() <= T::lit(i32::MAX as f64);
            if fits {
                v.to_i32()
            } else {
                None
            }
        };
        Node::Pow {
            base: Box::new(base),
            exponent: Box::new(exponent),
            integer,
        }
    }
}

pub(crate) fn tau_golden<T: Real>() -> T {
    (T::one() + T::lit(5.0).sqrt()) / T::two()
}

impl<T: Real> fmt::Display for FieldExpr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

fn write_child<T: Real>(node: &Node<T>, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if node.precedence() < min_prec {
        f.write_str("(")?;
        write_node(node, f)?;
        f.write_str(")")
    } else {
        write_node(node, f)
    }
}

fn write_node<T: Real>(node: &Node<T>, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Node::Const(c) => {
            let v = c.to_f64_lossy();
            if v.is_sign_negative() {
                write!(f, "-{}", -v)
            } else {
                write!(f, "{v}")
            }
        }
        Node::Var(Axis::X) => f.write_str("x"),
        Node::Var(Axis::Y) => f.write_str("y"),
        Node::Var(Axis::Z) => f.write_str("z"),
        Node::Named(NamedConst::Pi) => f.write_str("pi"),
        Node::Named(NamedConst::TauGolden) => f.write_str("tau_golden"),
        Node::Neg(a) => {
            f.write_str("-")?;
            write_child(a, 3, f)
        }
        Node::Func(func, a) => {
            let name = match func {
                Func::Sqrt => "sqrt",
                Func::Abs => "abs",
                Func::Sin => "sin",
                Func::Cos => "cos",
            };
            write!(f, "{name}(")?;
            write_node(a, f)?;
            f.write_str(")")
        }
        Node::Binary(op @ (BinOp::Min | BinOp::Max), a, b) => {
            f.write_str(if *op == BinOp::Min { "min(" } else { "max(" })?;
            write_node(a, f)?;
            f.write_str(", ")?;
            write_node(b, f)?;
            f.write_str(")")
        }
        Node::Binary(op, a, b) => {
            let (sym, prec) = match op {
                BinOp::Add => (" + ", 1),
                BinOp::Sub => (" - ", 1),
                BinOp::Mul => (" * ", 2),
                _ => (" / ", 2),
            };
            write_child(a, prec, f)?;
            f.write_str(sym)?;
            write_child(b, prec + 1, f)
        }
        Node::Pow { base, exponent, .. } => {
            write_child(base, 5, f)?;
            f.write_str("^")?;
            write_child(exponent, 3, f)
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer and recursive-descent parser

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Num(f64),
    Ident(&'a str),
    Sym(u8),
    End,
}

impl Tok<'_> {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Sym(c) => format!("'{}'", *c as char),
            Tok::End => "end of input".to_string(),
        }
    }
}

const ATOM_START: &[&str] = &["number", "identifier", "'('", "'-'"];

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok<'a>,
    tok_start: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut p = Parser {
            src,
            pos: 0,
            tok: Tok::End,
            tok_start: 0,
        };
        p.advance()?;
        Ok(p)
    }

    fn advance(&mut self) -> Result<(), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        if self.pos >= bytes.len() {
            self.tok = Tok::End;
            return Ok(());
        }
        let c = bytes[self.pos];
        if c.is_ascii_digit() || c == b'.' {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
                self.pos += 1;
            }
            if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
                let mut q = self.pos + 1;
                if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                    q += 1;
                }
                if q < bytes.len() && bytes[q].is_ascii_digit() {
                    while q < bytes.len() && bytes[q].is_ascii_digit() {
                        q += 1;
                    }
                    self.pos = q;
                }
            }
            let text = &self.src[start..self.pos];
            let v = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                offset: start,
                expected: vec!["number"],
                found: format!("`{text}`"),
            })?;
            self.tok = Tok::Num(v);
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_') {
                self.pos += 1;
            }
            self.tok = Tok::Ident(&self.src[start..self.pos]);
        } else if b"+-*/^(),".contains(&c) {
            self.pos += 1;
            self.tok = Tok::Sym(c);
        } else {
            let ch = self.src[self.pos..].chars().next().unwrap_or('?');
            return Err(ParseError::Syntax {
                offset: self.pos,
                expected: vec!["operator", "number", "identifier"],
                found: format!("'{ch}'"),
            });
        }
        Ok(())
    }

    fn error(&self, expected: &[&'static str]) -> ParseError {
        ParseError::Syntax {
            offset: self.tok_start,
            expected: expected.to_vec(),
            found: self.tok.describe(),
        }
    }

    fn eat(&mut self, sym: u8) -> Result<bool, ParseError> {
        if self.tok == Tok::Sym(sym) {
            self.advance()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn expect(&mut self, sym: u8, label: &'static str) -> Result<(), ParseError> {
        if self.eat(sym)? {
            Ok(())
        } else {
            Err(self.error(&[label]))
        }
    }

    fn expr<T: Real>(&mut self) -> Result<Node<T>, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Sym(b'+') => BinOp::Add,
                Tok::Sym(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term<T: Real>(&mut self) -> Result<Node<T>, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.tok {
                Tok::Sym(b'*') => BinOp::Mul,
                Tok::Sym(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.factor()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor<T: Real>(&mut self) -> Result<Node<T>, ParseError> {
        if self.eat(b'-')? {
            return Ok(Node::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if self.eat(b'^')? {
            let exponent = self.factor()?;
            return Ok(Node::pow(base, exponent));
        }
        Ok(base)
    }

    fn atom<T: Real>(&mut self) -> Result<Node<T>, ParseError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Node::Const(T::lit(v)))
            }
            Tok::Sym(b'(') => {
                self.advance()?;
                let inner = self.expr()?;
                self.expect(b')', "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let offset = self.tok_start;
                self.advance()?;
                match name {
                    "x" => Ok(Node::Var(Axis::X)),
                    "y" => Ok(Node::Var(Axis::Y)),
                    "z" => Ok(Node::Var(Axis::Z)),
                    "pi" => Ok(Node::Named(NamedConst::Pi)),
                    "tau_golden" => Ok(Node::Named(NamedConst::TauGolden)),
                    "sqrt" | "abs" | "sin" | "cos" => {
                        let func = match name {
                            "sqrt" => Func::Sqrt,
                            "abs" => Func::Abs,
                            "sin" => Func::Sin,
                            _ => Func::Cos,
                        };
                        self.expect(b'(', "'('")?;
                        let arg = self.expr()?;
                        self.expect(b')', "')'")?;
                        Ok(Node::Func(func, Box::new(arg)))
                    }
                    "min" | "max" => {
                        let op = if name == "min" { BinOp::Min } else { BinOp::Max };
                        self.expect(b'(', "'('")?;
                        let mut acc = self.expr()?;
                        self.expect(b',', "','")?;
                        loop {
                            let next = self.expr()?;
                            acc = Node::Binary(op, Box::new(acc), Box::new(next));
                            if !self.eat(b',')? {
                                break;
                            }
                        }
                        self.expect(b')', "')'")?;
                        Ok(acc)
                    }
                    _ => Err(ParseError::UnknownIdentifier {
                        name: name.to_string(),
                        offset,
                    }),
                }
            }
            _ => Err(self.error(ATOM_START)),
        }
    }
}

/// Parses an expression in the grammar documented at module level.
pub fn parse_expr<T: Real>(source: &str) -> Result<FieldExpr<T>, ParseError> {
    let mut parser = Parser::new(source)?;
    let root = parser.expr()?;
    if parser.tok != Tok::End {
        return Err(parser.error(&["operator", "end of input"]));
    }
    Ok(FieldExpr { root })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, p: [f64; 3]) -> f64 {
        parse_expr::<f64>(src).unwrap().eval(p)
    }

    #[test]
    fn unit_sphere_zero_on_surface() {
        assert_eq!(eval("x^2+y^2+z^2-1", [1.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn doubled_caret_is_syntax_error_at_offset_two() {
        let err = parse_expr::<f64>("x^^2").unwrap_err();
        assert_eq!(err.offset(), 2);
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn min_with_negated_argument() {
        assert_eq!(eval("min(x, -x)", [0.7, 0.0, 0.0]), -0.7);
    }

    #[test]
    fn caret_is_right_associative() {
        assert_eq!(eval("2^3^2", [0.0; 3]), 512.0);
    }

    #[test]
    fn unary_minus_binds_looser_than_caret() {
        assert_eq!(eval("-x^2", [3.0, 0.0, 0.0]), -9.0);
        assert_eq!(eval("2^-1", [0.0; 3]), 0.5);
    }

    #[test]
    fn integer_exponent_detected() {
        let e = parse_expr::<f64>("x^(1+1)").unwrap();
        assert!(matches!(e.root(), Node::Pow { integer: Some(2), .. }));
        let e = parse_expr::<f64>("x^0.5").unwrap();
        assert!(matches!(e.root(), Node::Pow { integer: None, .. }));
    }

    #[test]
    fn negative_base_integer_power_is_exact() {
        assert_eq!(eval("x^3", [-2.0, 0.0, 0.0]), -8.0);
    }

    #[test]
    fn unknown_identifier_is_named() {
        match parse_expr::<f64>("x + w").unwrap_err() {
            ParseError::UnknownIdentifier { name, offset } => {
                assert_eq!(name, "w");
                assert_eq!(offset, 4);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn variadic_min_max() {
        assert_eq!(eval("max(x, y, z)", [1.0, 3.0, 2.0]), 3.0);
        assert!(parse_expr::<f64>("min(x)").is_err());
        assert!(parse_expr::<f64>("sqrt(x, y)").is_err());
    }

    #[test]
    fn trailing_garbage_rejected() {
        let err = parse_expr::<f64>("x y").unwrap_err();
        assert_eq!(err.offset(), 2);
        assert!(parse_expr::<f64>("").is_err());
        assert!(parse_expr::<f64>("(x").is_err());
        assert!(parse_expr::<f64>("x $ y").is_err());
    }

    #[test]
    fn domain_violations_yield_nan() {
        assert!(eval("sqrt(x)", [-1.0, 0.0, 0.0]).is_nan());
        assert!(eval("0/x", [0.0, 0.0, 0.0]).is_nan());
        assert!(eval("1/x", [0.0, 0.0, 0.0]).is_infinite());
    }

    #[test]
    fn named_constants() {
        assert_eq!(eval("tau_golden", [0.0; 3]), (1.0 + 5f64.sqrt()) / 2.0);
        assert_eq!(eval("pi", [0.0; 3]), std::f64::consts::PI);
    }

    #[test]
    fn printer_parenthesizes_by_precedence() {
        let e = parse_expr::<f64>("(x - (y - z)) * -(x + 1) ^ 2 / (2 ^ 3) ^ 2").unwrap();
        let printed = e.to_string();
        let again = parse_expr::<f64>(&printed).unwrap();
        assert_eq!(e, again, "printed as {printed}");
    }

    #[test]
    fn exponent_literals() {
        assert_eq!(eval("1e-3 * 2E2", [0.0; 3]), 0.2);
    }
}
