//! Infix expression language used for user-supplied nonlinearities.
//!
//! Grammar (usual precedence, `^` binds tightest and is right-associative,
//! unary minus binds looser than `^` so `-x^2 = -(x^2)`):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | constant | variable | func '(' args ')' | '(' expr ')'
//! ```
//!
//! Functions: `sin cos tan atan exp log abs sqrt pos neg min max`, where
//! `pos(x) = x⁺` and `neg(x) = x⁻`. Constants: `pi`, `e`. Variables are drawn
//! from `t, x, y, theta`; each call site restricts which ones are legal.
//! Named sub-expressions can be supplied through [`Definitions`] and are
//! inlined at parse time.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{neg, pos, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("expression `{src}` evaluated to a non-finite value")]
    NonFinite { src: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    T,
    X,
    Y,
    Theta,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::X => "x",
            Var::Y => "y",
            Var::Theta => "theta",
        }
    }

    fn from_name(s: &str) -> Option<Var> {
        Some(match s {
            "t" => Var::T,
            "x" => Var::X,
            "y" => Var::Y,
            "theta" => Var::Theta,
            _ => return None,
        })
    }
}

/// Values bound to the free variables during evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vars<T> {
    pub t: T,
    pub x: T,
    pub y: T,
    pub theta: T,
}

impl<T: Real> Vars<T> {
    /// Bind `(t, z)` and the polar angle of `z` (zero at the origin).
    pub fn at(t: T, z: [T; 2]) -> Self {
        Vars {
            t,
            x: z[0],
            y: z[1],
            theta: z[1].atan2(z[0]),
        }
    }

    pub fn angle(theta: T) -> Self {
        Vars {
            t: T::zero(),
            x: theta.cos(),
            y: theta.sin(),
            theta,
        }
    }

    fn get(&self, v: Var) -> T {
        match v {
            Var::T => self.t,
            Var::X => self.x,
            Var::Y => self.y,
            Var::Theta => self.theta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Atan,
    Exp,
    Log,
    Abs,
    Sqrt,
    Pos,
    Neg,
    Min,
    Max,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "atan" => Func::Atan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "pos" => Func::Pos,
            "neg" => Func::Neg,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

/// Abstract syntax tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn eval<T: Real>(&self, v: &Vars<T>) -> T {
        match self {
            Expr::Num(c) => T::lit(*c),
            Expr::Var(var) => v.get(*var),
            Expr::Neg(a) => -a.eval(v),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(v), b.eval(v));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, args) => {
                let a = args[0].eval(v);
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Tan => a.tan(),
                    Func::Atan => a.atan(),
                    Func::Exp => a.exp(),
                    Func::Log => a.ln(),
                    Func::Abs => a.abs(),
                    Func::Sqrt => a.sqrt(),
                    Func::Pos => pos(a),
                    Func::Neg => neg(a),
                    Func::Min => a.min(args[1].eval(v)),
                    Func::Max => a.max(args[1].eval(v)),
                }
            }
        }
    }

    /// Value and exact derivative with respect to `wrt` (forward-mode
    /// differentiation of the tree). Piecewise functions use the one-sided
    /// derivative of the branch selected at the evaluation point.
    pub fn eval_with_derivative<T: Real>(&self, v: &Vars<T>, wrt: Var) -> (T, T) {
        let zero = T::zero();
        let one = T::one();
        match self {
            Expr::Num(c) => (T::lit(*c), zero),
            Expr::Var(var) => (v.get(*var), if *var == wrt { one } else { zero }),
            Expr::Neg(a) => {
                let (a, da) = a.eval_with_derivative(v, wrt);
                (-a, -da)
            }
            Expr::Bin(op, a, b) => {
                let (a, da) = a.eval_with_derivative(v, wrt);
                let (b, db) = b.eval_with_derivative(v, wrt);
                match op {
                    BinOp::Add => (a + b, da + db),
                    BinOp::Sub => (a - b, da - db),
                    BinOp::Mul => (a * b, da * b + a * db),
                    BinOp::Div => (a / b, (da * b - a * db) / (b * b)),
                    BinOp::Pow => {
                        let p = a.powf(b);
                        let d_base = if da == zero { zero } else { b * a.powf(b - one) * da };
                        let d_exp = if db == zero { zero } else { p * a.ln() * db };
                        (p, d_base + d_exp)
                    }
                }
            }
            Expr::Call(f, args) => {
                let (a, da) = args[0].eval_with_derivative(v, wrt);
                match f {
                    Func::Sin => (a.sin(), a.cos() * da),
                    Func::Cos => (a.cos(), -a.sin() * da),
                    Func::Tan => {
                        let t = a.tan();
                        (t, (one + t * t) * da)
                    }
                    Func::Atan => (a.atan(), da / (one + a * a)),
                    Func::Exp => {
                        let e = a.exp();
                        (e, e * da)
                    }
                    Func::Log => (a.ln(), da / a),
                    Func::Abs => {
                        let s = if a > zero {
                            one
                        } else if a < zero {
                            -one
                        } else {
                            zero
                        };
                        (a.abs(), s * da)
                    }
                    Func::Sqrt => {
                        let r = a.sqrt();
                        (r, da / (r + r))
                    }
                    Func::Pos => (pos(a), if a > zero { da } else { zero }),
                    Func::Neg => (neg(a), if a < zero { -da } else { zero }),
                    Func::Min | Func::Max => {
                        let (b, db) = args[1].eval_with_derivative(v, wrt);
                        let pick_a = if *f == Func::Min { a <= b } else { a >= b };
                        if pick_a {
                            (a, da)
                        } else {
                            (b, db)
                        }
                    }
                }
            }
        }
    }

    pub fn uses(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(a) => a.uses(var),
            Expr::Bin(_, a, b) => a.uses(var) || b.uses(var),
            Expr::Call(_, args) => args.iter().any(|a| a.uses(var)),
        }
    }
}

/// Named sub-expressions available to the parser.
pub type Definitions = BTreeMap<String, Expression>;

/// Parsed expression together with its source text.
#[derive(Clone, Debug, PartialEq)]
pub struct Expression {
    src: String,
    ast: Expr,
}

impl Expression {
    /// Parse `src`, allowing only the listed variables.
    pub fn parse(src: &str, allowed: &[Var]) -> Result<Self, ExprError> {
        Self::parse_with(src, allowed, &Definitions::new())
    }

    pub fn parse_with(src: &str, allowed: &[Var], defs: &Definitions) -> Result<Self, ExprError> {
        let tokens = lex(src)?;
        let mut p = Parser {
            tokens,
            idx: 0,
            allowed,
            defs,
            end: src.len(),
        };
        let ast = p.expr()?;
        if let Some(tok) = p.peek() {
            return Err(ExprError::Syntax {
                pos: tok.pos,
                msg: format!("unexpected {}", tok.kind),
            });
        }
        Ok(Expression {
            src: src.to_string(),
            ast,
        })
    }

    pub fn constant(c: f64) -> Self {
        Expression {
            src: format!("{c}"),
            ast: Expr::Num(c),
        }
    }

    pub fn source(&self) -> &str {
        &self.src
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn eval<T: Real>(&self, v: &Vars<T>) -> T {
        self.ast.eval(v)
    }

    /// Evaluate and reject NaN / infinite results.
    pub fn eval_finite<T: Real>(&self, v: &Vars<T>) -> Result<T, ExprError> {
        let r = self.ast.eval(v);
        if r.is_finite() {
            Ok(r)
        } else {
            Err(ExprError::NonFinite { src: self.src.clone() })
        }
    }

    pub fn eval_with_derivative<T: Real>(&self, v: &Vars<T>, wrt: Var) -> (T, T) {
        self.ast.eval_with_derivative(v, wrt)
    }

    pub fn uses(&self, var: Var) -> bool {
        self.ast.uses(var)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl fmt::Display for TokKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokKind::Num(n) => write!(f, "number {n}"),
            TokKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokKind::Op(c) => write!(f, "`{c}`"),
            TokKind::LParen => f.write_str("`(`"),
            TokKind::RParen => f.write_str("`)`"),
            TokKind::Comma => f.write_str("`,`"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokKind,
    pos: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ExprError> {
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
                // exponent only if followed by digits (optionally signed)
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let val: f64 = text.parse().map_err(|_| ExprError::Syntax {
                pos: start,
                msg: format!("malformed number `{text}`"),
            })?;
            out.push(Token {
                kind: TokKind::Num(val),
                pos: start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: TokKind::Ident(src[start..i].to_string()),
                pos: start,
            });
            continue;
        }
        let kind = match c {
            '+' | '-' | '*' | '/' | '^' => TokKind::Op(c),
            '(' => TokKind::LParen,
            ')' => TokKind::RParen,
            ',' => TokKind::Comma,
            _ => {
                return Err(ExprError::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        };
        out.push(Token { kind, pos: start });
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    idx: usize,
    allowed: &'a [Var],
    defs: &'a Definitions,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.idx)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.idx).cloned();
        self.idx += 1;
        t
    }

    fn pos(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn expect(&mut self, kind: TokKind) -> Result<(), ExprError> {
        match self.next() {
            Some(t) if t.kind == kind => Ok(()),
            Some(t) => Err(ExprError::Syntax {
                pos: t.pos,
                msg: format!("expected {kind}, found {}", t.kind),
            }),
            None => Err(ExprError::Syntax {
                pos: self.end,
                msg: format!("expected {kind}, found end of input"),
            }),
        }
    }

    fn is_op(&self, c: char) -> bool {
        matches!(self.peek(), Some(Token { kind: TokKind::Op(o), .. }) if *o == c)
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.is_op('+') {
                BinOp::Add
            } else if self.is_op('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            self.idx += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.is_op('*') {
                BinOp::Mul
            } else if self.is_op('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            self.idx += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.is_op('-') {
            self.idx += 1;
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Num(c) => Expr::Num(-c),
                other => Expr::Neg(Box::new(other)),
            });
        }
        if self.is_op('+') {
            self.idx += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.is_op('^') {
            self.idx += 1;
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        let tok = self.next().ok_or(ExprError::Syntax {
            pos,
            msg: "unexpected end of input".into(),
        })?;
        match tok.kind {
            TokKind::Num(c) => Ok(Expr::Num(c)),
            TokKind::LParen => {
                let e = self.expr()?;
                self.expect(TokKind::RParen)?;
                Ok(e)
            }
            TokKind::Ident(name) => self.identifier(name, tok.pos),
            other => Err(ExprError::Syntax {
                pos: tok.pos,
                msg: format!("unexpected {other}"),
            }),
        }
    }

    fn identifier(&mut self, name: String, pos: usize) -> Result<Expr, ExprError> {
        if let Some(f) = Func::from_name(&name) {
            self.expect(TokKind::LParen)?;
            let mut args = vec![self.expr()?];
            while matches!(
                self.peek(),
                Some(Token {
                    kind: TokKind::Comma,
                    ..
                })
            ) {
                self.idx += 1;
                args.push(self.expr()?);
            }
            self.expect(TokKind::RParen)?;
            if args.len() != f.arity() {
                return Err(ExprError::Syntax {
                    pos,
                    msg: format!("`{name}` takes {} argument(s), got {}", f.arity(), args.len()),
                });
            }
            return Ok(Expr::Call(f, args));
        }
        match name.as_str() {
            "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
            "e" => return Ok(Expr::Num(std::f64::consts::E)),
            _ => {}
        }
        if let Some(v) = Var::from_name(&name) {
            if self.allowed.contains(&v) {
                return Ok(Expr::Var(v));
            }
        }
        if let Some(def) = self.defs.get(&name) {
            // definitions must only use variables legal at this call site
            for v in [Var::T, Var::X, Var::Y, Var::Theta] {
                if def.uses(v) && !self.allowed.contains(&v) {
                    return Err(ExprError::UnknownIdentifier {
                        name: v.name().to_string(),
                        pos,
                    });
                }
            }
            return Ok(def.ast.clone());
        }
        Err(ExprError::UnknownIdentifier { name, pos })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const ALL: &[Var] = &[Var::T, Var::X, Var::Y, Var::Theta];

    fn at_x(x: f64) -> Vars<f64> {
        Vars {
            x,
            ..Default::default()
        }
    }

    #[test]
    fn documented_examples() {
        let e = Expression::parse("x + atan(x) - 1", ALL).unwrap();
        assert_eq!(e.eval(&at_x(0.0)), -1.0);
        let e = Expression::parse("4*pos(x) - 1*neg(x)", ALL).unwrap();
        assert_eq!(e.eval(&at_x(-2.0)), -2.0);
        let e = Expression::parse("sin(t)^2", ALL).unwrap();
        let v = Vars {
            t: PI / 2.0,
            ..Default::default()
        };
        assert!((e.eval(&v) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn precedence_and_associativity() {
        let ev = |s: &str| Expression::parse(s, ALL).unwrap().eval(&at_x(3.0));
        assert_eq!(ev("-x^2"), -9.0);
        assert_eq!(ev("2^3^2"), 512.0);
        assert_eq!(ev("1 - 2 - 3"), -4.0);
        assert_eq!(ev("12 / 3 / 2"), 2.0);
        assert_eq!(ev("2 + 3 * x"), 11.0);
        assert_eq!(ev("(2 + 3) * x"), 15.0);
        assert_eq!(ev("min(x, 1) + max(x, 1)"), 4.0);
        assert_eq!(ev("1.5e1 + .5"), 15.5);
        assert_eq!(ev("2*e - e*2"), 0.0);
        assert_eq!(ev("abs(-x) + sqrt(4) + log(exp(1))"), 6.0);
    }

    #[test]
    fn errors_carry_positions() {
        match Expression::parse("x + * 2", ALL) {
            Err(ExprError::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        match Expression::parse("x + foo", ALL) {
            Err(ExprError::UnknownIdentifier { name, pos }) => {
                assert_eq!(name, "foo");
                assert_eq!(pos, 4);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            Expression::parse("y", &[Var::T, Var::X]),
            Err(ExprError::UnknownIdentifier { .. })
        ));
        assert!(matches!(Expression::parse("sin(x", ALL), Err(ExprError::Syntax { .. })));
        assert!(matches!(
            Expression::parse("min(x)", ALL),
            Err(ExprError::Syntax { .. })
        ));
        assert!(matches!(
            Expression::parse("x $ 2", ALL),
            Err(ExprError::Syntax { pos: 2, .. })
        ));
        assert!(matches!(Expression::parse("", ALL), Err(ExprError::Syntax { .. })));
        assert!(matches!(
            Expression::parse("(x))", ALL),
            Err(ExprError::Syntax { pos: 3, .. })
        ));
    }

    #[test]
    fn definitions_are_inlined() {
        let mut defs = Definitions::new();
        defs.insert("r2".into(), Expression::parse("x^2 + y^2", ALL).unwrap());
        let e = Expression::parse_with("sqrt(r2)", ALL, &defs).unwrap();
        let v = Vars {
            x: 3.0,
            y: 4.0,
            ..Default::default()
        };
        assert_eq!(e.eval(&v), 5.0);
        // a definition using y is illegal where only t, x are allowed
        assert!(Expression::parse_with("r2", &[Var::T, Var::X], &defs).is_err());
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let srcs = [
            "0.5*(sin(theta)^2 + 4*pos(cos(theta))^2 + neg(cos(theta))^2)",
            "exp(sin(theta)) / (2 + cos(theta))",
            "sqrt(1 + abs(theta)) * atan(theta) - log(3 + tan(theta/4))",
            "max(theta, 0.2) * min(theta^3, 1) + 2^theta",
        ];
        for src in srcs {
            let e = Expression::parse(src, &[Var::Theta]).unwrap();
            for k in 1..40 {
                let th = -3.0 + 0.1537 * k as f64;
                let h = 1e-6;
                let (_, d) = e.eval_with_derivative(&Vars::angle(th), Var::Theta);
                let fd = (e.eval(&Vars::angle(th + h)) - e.eval(&Vars::angle(th - h))) / (2.0 * h);
                assert!((d - fd).abs() <= 1e-6 * (1.0 + fd.abs()), "{src} at {th}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn eval_finite_rejects_nan() {
        let e = Expression::parse("log(x)", ALL).unwrap();
        assert!(e.eval_finite(&at_x(-1.0)).is_err());
        assert!(e.eval_finite(&at_x(1.0)).is_ok());
    }

    #[test]
    fn generic_over_f32() {
        let e = Expression::parse("x^2 + 1", ALL).unwrap();
        let v = Vars {
            x: 2.0f32,
            ..Default::default()
        };
        assert_eq!(e.eval(&v), 5.0f32);
    }
}
