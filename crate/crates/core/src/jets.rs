//! Truncated Taylor jets.
//!
//! A [`Jet`] of order `K` at a point `q0` stores the value and the first `K`
//! derivatives of a scalar function. Coefficients are raw derivatives,
//! `coeffs[m] = f^(m)(q0)`, not Taylor coefficients `f^(m)(q0)/m!`. Products
//! therefore follow the Leibniz rule with binomial weights, which is the same
//! bookkeeping used by operator composition in [`crate::diffops`].
//!
//! The checked entry points ([`Jet::seed`], [`Jet::arith`]) enforce the
//! public contract (minimum order, matching center and order). The operator
//! impls (`+`, `-`, `*`) are the internal fast path: they truncate to the
//! common order, which is what derived quantities need after differentiation
//! has consumed derivative slots.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Smallest order accepted when seeding a jet.
pub const MIN_ORDER: usize = 5;
/// Default order used throughout the crate.
pub const DEFAULT_ORDER: usize = 6;
/// Default magnitude below which a divisor counts as zero.
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedKind {
    Constant,
    Variable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elementary {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Pow(f64),
}

impl Elementary {
    pub fn name(&self) -> &'static str {
        match self {
            Elementary::Sin => "sin",
            Elementary::Cos => "cos",
            Elementary::Exp => "exp",
            Elementary::Log => "log",
            Elementary::Sqrt => "sqrt",
            Elementary::Sinh => "sinh",
            Elementary::Cosh => "cosh",
            Elementary::Tanh => "tanh",
            Elementary::Pow(_) => "pow",
        }
    }
}

/// Binomial coefficient as a float; orders here are small.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

fn factorials(k: usize) -> Vec<f64> {
    let mut f = Vec::with_capacity(k + 1);
    let mut acc = 1.0;
    f.push(acc);
    for m in 1..=k {
        acc *= m as f64;
        f.push(acc);
    }
    f
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    center: f64,
    coeffs: Vec<f64>,
}

impl Jet {
    /// Seeds a constant or the identity function `q` at `q0`.
    pub fn seed(kind: SeedKind, value: f64, q0: f64, order: usize) -> Result<Self> {
        if order < MIN_ORDER {
            return Err(Error::JetOrderTooSmall {
                order,
                min: MIN_ORDER,
            });
        }
        Ok(match kind {
            SeedKind::Constant => Jet::constant(value, q0, order),
            SeedKind::Variable => Jet::variable(q0, order),
        })
    }

    /// Constant jet without the minimum-order check.
    pub fn constant(value: f64, q0: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Jet { center: q0, coeffs }
    }

    /// Jet of the identity function `q` without the minimum-order check.
    pub fn variable(q0: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = q0;
        if order >= 1 {
            coeffs[1] = 1.0;
        }
        Jet { center: q0, coeffs }
    }

    pub fn zero(q0: f64, order: usize) -> Self {
        Jet::constant(0.0, q0, order)
    }

    /// Builds a jet from raw derivative values.
    pub fn from_derivatives(q0: f64, coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least a value slot");
        Jet { center: q0, coeffs }
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `m`-th derivative value, if the jet carries it.
    pub fn deriv(&self, m: usize) -> Option<f64> {
        self.coeffs.get(m).copied()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Derivative of the underlying function; the order drops by one.
    pub fn derivative(&self) -> Result<Jet> {
        if self.coeffs.len() < 2 {
            return Err(Error::JetExhausted { required: 1 });
        }
        Ok(Jet {
            center: self.center,
            coeffs: self.coeffs[1..].to_vec(),
        })
    }

    /// `k`-fold derivative; fails when fewer than `k` slots remain.
    pub fn nth_derivative(&self, k: usize) -> Result<Jet> {
        if k > self.order() {
            return Err(Error::JetExhausted { required: k });
        }
        Ok(Jet {
            center: self.center,
            coeffs: self.coeffs[k..].to_vec(),
        })
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let len = (order + 1).min(self.coeffs.len());
        Jet {
            center: self.center,
            coeffs: self.coeffs[..len].to_vec(),
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            center: self.center,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// Checked binary arithmetic: centers and orders must agree.
    pub fn arith(op: ArithOp, a: &Jet, b: &Jet) -> Result<Jet> {
        a.check_compatible(b)?;
        match op {
            ArithOp::Add => Ok(a + b),
            ArithOp::Sub => Ok(a - b),
            ArithOp::Mul => Ok(a * b),
            ArithOp::Div => a.checked_div(b),
        }
    }

    fn check_compatible(&self, other: &Jet) -> Result<()> {
        if self.center != other.center {
            return Err(Error::JetMismatch(format!(
                "centers differ ({} vs {})",
                self.center, other.center
            )));
        }
        if self.order() != other.order() {
            return Err(Error::JetMismatch(format!(
                "orders differ ({} vs {})",
                self.order(),
                other.order()
            )));
        }
        Ok(())
    }

    pub fn checked_div(&self, other: &Jet) -> Result<Jet> {
        self.checked_div_with(other, DEFAULT_ZERO_THRESHOLD)
    }

    /// Quotient via the Leibniz recursion `f = h g`; `threshold` bounds the
    /// divisor's value away from zero.
    pub fn checked_div_with(&self, other: &Jet, threshold: f64) -> Result<Jet> {
        let g0 = other.value();
        if !(g0.abs() > threshold) {
            return Err(Error::singular(self.center, "division by zero"));
        }
        let k = self.order().min(other.order());
        let mut h = Vec::with_capacity(k + 1);
        for n in 0..=k {
            let mut acc = self.coeffs[n];
            for (j, hj) in h.iter().enumerate() {
                acc -= binomial(n, j) * hj * other.coeffs[n - j];
            }
            h.push(acc / g0);
        }
        let out = Jet {
            center: self.center,
            coeffs: h,
        };
        out.finite_or("division")
    }

    pub fn recip(&self) -> Result<Jet> {
        Jet::constant(1.0, self.center, self.order()).checked_div(self)
    }

    /// Integer power by repeated squaring; negative exponents go through
    /// [`Jet::recip`].
    pub fn powi(&self, n: i32) -> Result<Jet> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut base = self.clone();
        let mut acc = Jet::constant(1.0, self.center, self.order());
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc.finite_or("power")
    }

    pub fn apply(&self, f: Elementary) -> Result<Jet> {
        let a0 = self.value();
        let domain = |name: &str| Error::Domain {
            func: name.to_string(),
            q: self.center,
            arg: a0,
        };
        let out = match f {
            Elementary::Sin => self.sin_cos(false).0,
            Elementary::Cos => self.sin_cos(false).1,
            Elementary::Sinh => self.sin_cos(true).0,
            Elementary::Cosh => self.sin_cos(true).1,
            Elementary::Exp => self.exp(),
            Elementary::Tanh => self.tanh(),
            Elementary::Log => {
                if !(a0 > 0.0) {
                    return Err(domain("log"));
                }
                self.ln()
            }
            Elementary::Sqrt => {
                if !(a0 > 0.0) {
                    return Err(domain("sqrt"));
                }
                self.sqrt()
            }
            Elementary::Pow(r) => {
                if r.fract() == 0.0 && r.abs() <= i32::MAX as f64 {
                    return self.powi(r as i32);
                }
                if !(a0 > 0.0) {
                    return Err(domain("pow"));
                }
                self.powf(r)
            }
        };
        out.finite_or(f.name())
    }

    fn finite_or(self, what: &str) -> Result<Jet> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::NonFinite {
                q: self.center,
                what: what.to_string(),
            })
        }
    }

    // Elementary functions run on normalized Taylor coefficients, where the
    // standard ODE recurrences are simplest, and convert back at the end.

    fn taylor(&self) -> Vec<f64> {
        let f = factorials(self.order());
        self.coeffs.iter().zip(&f).map(|(c, f)| c / f).collect()
    }

    fn from_taylor(center: f64, t: Vec<f64>) -> Jet {
        let f = factorials(t.len() - 1);
        Jet {
            center,
            coeffs: t.iter().zip(&f).map(|(c, f)| c * f).collect(),
        }
    }

    fn exp(&self) -> Jet {
        let a = self.taylor();
        let k = a.len() - 1;
        let mut e = vec![0.0; k + 1];
        e[0] = a[0].exp();
        for n in 1..=k {
            let s: f64 = (1..=n).map(|j| j as f64 * a[j] * e[n - j]).sum();
            e[n] = s / n as f64;
        }
        Jet::from_taylor(self.center, e)
    }

    fn ln(&self) -> Jet {
        let a = self.taylor();
        let k = a.len() - 1;
        let mut l = vec![0.0; k + 1];
        l[0] = a[0].ln();
        for n in 1..=k {
            let s: f64 = (1..n).map(|j| j as f64 * l[j] * a[n - j]).sum();
            l[n] = (a[n] - s / n as f64) / a[0];
        }
        Jet::from_taylor(self.center, l)
    }

    /// `(sin, cos)` or, with `hyperbolic`, `(sinh, cosh)`.
    fn sin_cos(&self, hyperbolic: bool) -> (Jet, Jet) {
        let a = self.taylor();
        let k = a.len() - 1;
        let mut s = vec![0.0; k + 1];
        let mut c = vec![0.0; k + 1];
        let sign = if hyperbolic { 1.0 } else { -1.0 };
        if hyperbolic {
            s[0] = a[0].sinh();
            c[0] = a[0].cosh();
        } else {
            s[0] = a[0].sin();
            c[0] = a[0].cos();
        }
        for n in 1..=k {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=n {
                ss += j as f64 * a[j] * c[n - j];
                cc += j as f64 * a[j] * s[n - j];
            }
            s[n] = ss / n as f64;
            c[n] = sign * cc / n as f64;
        }
        (
            Jet::from_taylor(self.center, s),
            Jet::from_taylor(self.center, c),
        )
    }

    fn tanh(&self) -> Jet {
        let a = self.taylor();
        let k = a.len() - 1;
        let mut t = vec![0.0; k + 1];
        // u = 1 - t^2, filled one slot behind t
        let mut u = vec![0.0; k + 1];
        t[0] = a[0].tanh();
        u[0] = 1.0 - t[0] * t[0];
        for n in 1..=k {
            let s: f64 = (1..=n).map(|j| j as f64 * a[j] * u[n - j]).sum();
            t[n] = s / n as f64;
            let sq: f64 = (0..=n).map(|i| t[i] * t[n - i]).sum();
            u[n] = -sq;
        }
        Jet::from_taylor(self.center, t)
    }

    fn sqrt(&self) -> Jet {
        let a = self.taylor();
        let k = a.len() - 1;
        let mut s = vec![0.0; k + 1];
        s[0] = a[0].sqrt();
        for n in 1..=k {
            let cross: f64 = (1..n).map(|j| s[j] * s[n - j]).sum();
            s[n] = (a[n] - cross) / (2.0 * s[0]);
        }
        Jet::from_taylor(self.center, s)
    }

    fn powf(&self, r: f64) -> Jet {
        // a p' = r a' p
        let a = self.taylor();
        let k = a.len() - 1;
        let mut p = vec![0.0; k + 1];
        p[0] = a[0].powf(r);
        for n in 1..=k {
            let s: f64 = (1..=n)
                .map(|j| (r * j as f64 - (n - j) as f64) * a[j] * p[n - j])
                .sum();
            p[n] = s / (n as f64 * a[0]);
        }
        Jet::from_taylor(self.center, p)
    }
}

fn zip_with(a: &Jet, b: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
    debug_assert_eq!(a.center, b.center, "jets at different centers");
    let len = a.coeffs.len().min(b.coeffs.len());
    Jet {
        center: a.center,
        coeffs: (0..len).map(|i| f(a.coeffs[i], b.coeffs[i])).collect(),
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        zip_with(self, rhs, |x, y| x + y)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        zip_with(self, rhs, |x, y| x - y)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        debug_assert_eq!(self.center, rhs.center, "jets at different centers");
        let k = self.order().min(rhs.order());
        let coeffs = (0..=k)
            .map(|n| {
                (0..=n)
                    .map(|j| binomial(n, j) * self.coeffs[j] * rhs.coeffs[n - j])
                    .sum()
            })
            .collect();
        Jet {
            center: self.center,
            coeffs,
        }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul<&Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        rhs.scale(self)
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet { (&self).$m(&rhs) }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet { (&self).$m(rhs) }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet { self.$m(&rhs) }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs.scale(self)
    }
}
