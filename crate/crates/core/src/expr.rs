//! Expression language for user-supplied scalar functions of `q`.
//!
//! Grammar (whitespace insignificant, no implicit multiplication):
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := atom ('^' exponent)?
//! exponent := '-'? NUMBER | '(' '-'? NUMBER ')'
//! atom     := NUMBER | 'q' | 'pi' | 'e' | FUNC '(' expr ')' | '(' expr ')'
//! FUNC     := sin | cos | exp | log | sqrt | sinh | cosh | tanh
//! ```
//!
//! Exponents are restricted to real literals so the jet power rules stay
//! exact. Parsed number literals are always non-negative; negation is a
//! separate node.

use std::fmt;

use crate::error::{Error, Result};
use crate::jets::{Elementary, Jet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
    ];

    pub fn name(self) -> &'static str {
        self.elementary().name()
    }

    fn elementary(self) -> Elementary {
        match self {
            Func::Sin => Elementary::Sin,
            Func::Cos => Elementary::Cos,
            Func::Exp => Elementary::Exp,
            Func::Log => Elementary::Log,
            Func::Sqrt => Elementary::Sqrt,
            Func::Sinh => Elementary::Sinh,
            Func::Cosh => Elementary::Cosh,
            Func::Tanh => Elementary::Tanh,
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Const(Constant),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Base raised to a literal real exponent.
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let mut p = Parser { src: text, pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < text.len() {
            return Err(p.syntax(&["+", "-", "*", "/", "^", "end of input"]));
        }
        Ok(e)
    }

    /// Jet of this expression at `q0`, carrying `order` derivatives.
    pub fn eval_jet(&self, q0: f64, order: usize) -> Result<Jet> {
        let out = match self {
            Expr::Num(x) => return Ok(Jet::constant(*x, q0, order)),
            Expr::Const(c) => return Ok(Jet::constant(c.value(), q0, order)),
            Expr::Var => return Ok(Jet::variable(q0, order)),
            Expr::Neg(a) => return Ok(-a.eval_jet(q0, order)?),
            Expr::Binary(op, a, b) => {
                let a = a.eval_jet(q0, order)?;
                let b = b.eval_jet(q0, order)?;
                match op {
                    BinOp::Add => Ok(a + b),
                    BinOp::Sub => Ok(a - b),
                    BinOp::Mul => Ok(a * b),
                    BinOp::Div => a.checked_div(&b),
                }
            }
            Expr::Pow(a, r) => a.eval_jet(q0, order)?.apply(Elementary::Pow(*r)),
            Expr::Call(f, a) => a.eval_jet(q0, order)?.apply(f.elementary()),
        };
        out.map_err(|source| Error::InExpr {
            expr: self.to_string(),
            source: Box::new(source),
        })
    }

    /// Plain value at `q`.
    pub fn eval(&self, q: f64) -> Result<f64> {
        Ok(self.eval_jet(q, 0)?.value())
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Var => false,
            Expr::Num(_) | Expr::Const(_) => true,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.is_constant(),
            Expr::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(x) if *x < 0.0 => 3,
            _ => 5,
        }
    }
}

fn write_num(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    if x < 0.0 {
        write!(f, "(-{})", -x)
    } else {
        write!(f, "{x}")
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write_num(f, *x),
            Expr::Var => f.write_str("q"),
            Expr::Const(Constant::Pi) => f.write_str("pi"),
            Expr::Const(Constant::E) => f.write_str("e"),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_child(f, a, a.precedence() < 3)
            }
            Expr::Binary(op, a, b) => {
                let p = self.precedence();
                write_child(f, a, a.precedence() < p)?;
                f.write_str(match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                })?;
                write_child(f, b, b.precedence() <= p)
            }
            Expr::Pow(a, r) => {
                write_child(f, a, a.precedence() < 5)?;
                write!(f, "^{r}")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Expr> {
        Expr::parse(s)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn syntax(&self, expected: &[&str]) -> Error {
        let found = match self.peek() {
            Some(c) => format!("`{c}`"),
            None => "end of input".to_string(),
        };
        Error::Syntax {
            offset: self.pos,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat('^') {
            let r = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), r));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<f64> {
        if self.eat('(') {
            let r = self.signed_number()?;
            if !self.eat(')') {
                return Err(self.syntax(&[")"]));
            }
            return Ok(r);
        }
        self.signed_number()
    }

    fn signed_number(&mut self) -> Result<f64> {
        let neg = self.eat('-');
        self.skip_ws();
        match self.number()? {
            Some(x) => Ok(if neg { -x } else { x }),
            None => Err(self.syntax(&["number literal"])),
        }
    }

    fn number(&mut self) -> Result<Option<f64>> {
        let bytes = self.rest().as_bytes();
        let mut i = 0;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let int_digits = i;
        if i < bytes.len() && bytes[i] == b'.' {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
        let mantissa_digits = i - usize::from(i > int_digits);
        if mantissa_digits == 0 {
            return Ok(None);
        }
        // Exponent marker only when followed by digits, so `2e` stays an error.
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
        let text = &self.rest()[..i];
        let value: f64 = text.parse().map_err(|_| self.syntax(&["number literal"]))?;
        if !value.is_finite() {
            return Err(self.syntax(&["finite number literal"]));
        }
        self.pos += i;
        Ok(Some(value))
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        if let Some(x) = self.number()? {
            return Ok(Expr::Num(x));
        }
        if self.eat('(') {
            let e = self.expr()?;
            if !self.eat(')') {
                return Err(self.syntax(&[")"]));
            }
            return Ok(e);
        }
        let start = self.pos;
        let ident: String = self
            .rest()
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
            .collect();
        if ident.is_empty() || ident.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(self.syntax(&["number", "q", "pi", "e", "function", "("]));
        }
        self.pos += ident.len();
        match ident.as_str() {
            "q" => Ok(Expr::Var),
            "pi" => Ok(Expr::Const(Constant::Pi)),
            "e" => Ok(Expr::Const(Constant::E)),
            name => {
                let Some(func) = Func::lookup(name) else {
                    return Err(Error::UnknownIdentifier {
                        name: name.to_string(),
                        offset: start,
                    });
                };
                if !self.eat('(') {
                    return Err(self.syntax(&["("]));
                }
                let arg = self.expr()?;
                if !self.eat(')') {
                    return Err(self.syntax(&[")"]));
                }
                Ok(Expr::Call(func, Box::new(arg)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn num(x: f64) -> Box<Expr> {
        Box::new(Expr::Num(x))
    }

    #[test]
    fn precedence_structure() {
        assert_eq!(
            p("q^2 - 1"),
            Expr::Binary(
                BinOp::Sub,
                Box::new(Expr::Pow(Box::new(Expr::Var), 2.0)),
                num(1.0)
            )
        );
        let sin_sq = Expr::Pow(Box::new(Expr::Call(Func::Sin, Box::new(Expr::Var))), 2.0);
        assert_eq!(
            p("2*q + sin(q)^2"),
            Expr::Binary(
                BinOp::Add,
                Box::new(Expr::Binary(BinOp::Mul, num(2.0), Box::new(Expr::Var))),
                Box::new(sin_sq)
            )
        );
        // ^ binds tighter than unary minus
        assert_eq!(
            p("-q^2"),
            Expr::Neg(Box::new(Expr::Pow(Box::new(Expr::Var), 2.0)))
        );
    }

    #[test]
    fn implicit_multiplication_rejected() {
        match Expr::parse("2q").unwrap_err() {
            Error::Syntax { offset, .. } => assert_eq!(offset, 1),
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(
            Expr::parse("2e"),
            Err(Error::Syntax { offset: 1, .. })
        ));
        assert!(matches!(
            Expr::parse("q (2)"),
            Err(Error::Syntax { offset: 2, .. })
        ));
    }

    #[test]
    fn error_kinds() {
        assert!(matches!(
            Expr::parse("1 + x"),
            Err(Error::UnknownIdentifier { ref name, offset: 4 }) if name == "x"
        ));
        assert!(matches!(
            Expr::parse("foo(q)"),
            Err(Error::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            Expr::parse("q^q"),
            Err(Error::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            Expr::parse("(q"),
            Err(Error::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            Expr::parse(""),
            Err(Error::Syntax { offset: 0, .. })
        ));
        assert!(matches!(Expr::parse("sin q"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn literals() {
        assert_eq!(p("1.5e-3"), Expr::Num(1.5e-3));
        assert_eq!(p(".25"), Expr::Num(0.25));
        assert_eq!(p("q^-2"), Expr::Pow(Box::new(Expr::Var), -2.0));
        assert_eq!(p("q^(-0.5)"), Expr::Pow(Box::new(Expr::Var), -0.5));
        assert!(Expr::parse("1e999").is_err());
    }

    #[test]
    fn jet_values() {
        let j = p("q^3").eval_jet(2.0, 3).unwrap();
        assert_eq!(j.coeffs(), &[8.0, 12.0, 12.0, 6.0]);
        let j = p("-2*q").eval_jet(1.0, 2).unwrap();
        assert_eq!(j.coeffs(), &[-2.0, -2.0, 0.0]);
        let err = p("1/(q-2)").eval_jet(2.0, 5).unwrap_err();
        assert_eq!(err.location(), Some(2.0));
        assert!(err.to_string().contains("1/(q - 2)"), "{err}");
    }

    #[test]
    fn pretty_print_round_trip() {
        for s in [
            "a",
            "q - (q - 1)",
            "-(q + 1)",
            "(-q)^2",
            "--q",
            "2/(q*q)",
            "exp(-q^2/2)",
        ] {
            let Ok(e) = Expr::parse(s) else { continue };
            assert_eq!(Expr::parse(&e.to_string()).unwrap(), e, "{s} -> {e}");
        }
    }
}
