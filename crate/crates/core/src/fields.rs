//! Function-valued building blocks evaluated lazily as jets.
//!
//! Fields are cheap to clone (reference counted) and immutable, so the same
//! coefficient can be shared across operators and evaluated from several
//! threads.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Result;
use crate::expr::Expr;
use crate::jets::Jet;
use crate::linalg::{CJet, CMat, MatJet};

type JetFn = dyn Fn(f64, usize) -> Result<Jet> + Send + Sync;
type MatFn = dyn Fn(f64, usize) -> Result<MatJet> + Send + Sync;

/// A real scalar function of `q`.
///
/// Evaluation at order `K` returns a jet of order at most `K`; fields
/// derived through differentiation come back shorter.
#[derive(Clone)]
pub struct ScalarField {
    label: Arc<str>,
    f: Arc<JetFn>,
}

impl ScalarField {
    pub fn from_fn(
        label: impl Into<String>,
        f: impl Fn(f64, usize) -> Result<Jet> + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            label: label.into().into(),
            f: Arc::new(f),
        }
    }

    pub fn from_expr(expr: Expr) -> Self {
        let label = expr.to_string();
        ScalarField::from_fn(label, move |q, k| expr.eval_jet(q, k))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(ScalarField::from_expr(Expr::parse(text)?))
    }

    pub fn constant(c: f64) -> Self {
        ScalarField::from_fn(format!("{c}"), move |q, k| Ok(Jet::constant(c, q, k)))
    }

    pub fn zero() -> Self {
        ScalarField::constant(0.0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, q: f64, order: usize) -> Result<Jet> {
        (self.f)(q, order)
    }

    pub fn value(&self, q: f64) -> Result<f64> {
        Ok(self.eval(q, 0)?.value())
    }

    /// `self + other`, evaluated pointwise.
    pub fn plus(&self, other: &ScalarField) -> ScalarField {
        let (a, b) = (self.clone(), other.clone());
        ScalarField::from_fn(
            format!("({}) + ({})", self.label, other.label),
            move |q, k| Ok(a.eval(q, k)? + b.eval(q, k)?),
        )
    }

    /// `c * self`.
    pub fn scaled(&self, c: f64) -> ScalarField {
        let a = self.clone();
        ScalarField::from_fn(format!("{c}*({})", self.label), move |q, k| {
            Ok(a.eval(q, k)?.scale(c))
        })
    }

    /// `d/dq self`, evaluated one order higher and shifted down.
    pub fn derivative(&self) -> ScalarField {
        let a = self.clone();
        ScalarField::from_fn(format!("d/dq({})", self.label), move |q, k| {
            a.eval(q, k + 1)?.derivative()
        })
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.label)
    }
}

/// A complex scalar function `re + i im`.
#[derive(Clone, Debug)]
pub struct ComplexField {
    pub re: ScalarField,
    pub im: Option<ScalarField>,
}

impl ComplexField {
    pub fn real(re: ScalarField) -> Self {
        ComplexField { re, im: None }
    }

    pub fn new(re: ScalarField, im: ScalarField) -> Self {
        ComplexField { re, im: Some(im) }
    }

    pub fn parse(re: &str) -> Result<Self> {
        Ok(ComplexField::real(ScalarField::parse(re)?))
    }

    pub fn zero() -> Self {
        ComplexField::real(ScalarField::zero())
    }

    pub fn eval(&self, q: f64, order: usize) -> Result<CJet> {
        let re = self.re.eval(q, order)?;
        Ok(match &self.im {
            None => CJet::real(re),
            Some(im) => CJet {
                re,
                im: im.eval(q, order)?,
            },
        })
    }
}

/// A vector of `n` complex functions, e.g. a test wavefunction.
#[derive(Clone, Debug)]
pub struct VectorFieldFn {
    pub components: Vec<ComplexField>,
}

impl VectorFieldFn {
    pub fn new(components: Vec<ComplexField>) -> Self {
        VectorFieldFn { components }
    }

    /// Real components parsed from expression strings.
    pub fn parse_real(components: &[&str]) -> Result<Self> {
        Ok(VectorFieldFn {
            components: components
                .iter()
                .map(|s| ComplexField::parse(s))
                .collect::<Result<_>>()?,
        })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, q: f64, order: usize) -> Result<Vec<CJet>> {
        self.components.iter().map(|c| c.eval(q, order)).collect()
    }

    pub fn values(&self, q: f64) -> Result<Vec<Complex64>> {
        self.components
            .iter()
            .map(|c| Ok(c.eval(q, 0)?.value()))
            .collect()
    }
}

/// An `n x n` matrix-valued function of `q`.
#[derive(Clone)]
pub struct MatField {
    n: usize,
    f: Arc<MatFn>,
}

impl MatField {
    pub fn from_fn(
        n: usize,
        f: impl Fn(f64, usize) -> Result<MatJet> + Send + Sync + 'static,
    ) -> Self {
        MatField { n, f: Arc::new(f) }
    }

    pub fn constant(m: CMat) -> Self {
        let n = m.dim();
        MatField::from_fn(n, move |q, k| Ok(MatJet::constant(&m, q, k)))
    }

    pub fn identity(n: usize) -> Self {
        MatField::constant(CMat::identity(n))
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        MatField::constant(CMat::identity(n).scale(Complex64::new(s, 0.0)))
    }

    pub fn zeros(n: usize) -> Self {
        MatField::constant(CMat::zeros(n))
    }

    /// Row-major entries.
    pub fn from_entries(n: usize, entries: Vec<ComplexField>) -> Self {
        assert_eq!(entries.len(), n * n, "need n*n entries");
        MatField::from_fn(n, move |q, k| {
            MatJet::from_entries(
                n,
                entries
                    .iter()
                    .map(|e| e.eval(q, k))
                    .collect::<Result<_>>()?,
            )
        })
    }

    /// `s(q) * I_n` for a real scalar field.
    pub fn scalar(n: usize, s: ScalarField) -> Self {
        MatField::from_fn(n, move |q, k| {
            let v = s.eval(q, k)?;
            let ord = v.order();
            let mut entries = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    entries.push(if i == j {
                        CJet::real(v.clone())
                    } else {
                        CJet::zero(q, ord)
                    });
                }
            }
            MatJet::from_entries(n, entries)
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn eval(&self, q: f64, order: usize) -> Result<MatJet> {
        (self.f)(q, order)
    }

    pub fn value(&self, q: f64) -> Result<CMat> {
        Ok(self.eval(q, 0)?.value())
    }
}

impl fmt::Debug for MatField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MatField({}x{})", self.n, self.n)
    }
}
