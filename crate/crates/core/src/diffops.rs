//! Linear differential operators with `n x n` matrix coefficients,
//! `L = sum_k A_k(q) d^k/dq^k`.
//!
//! Operators are immutable expression trees over coefficient fields.
//! Composition, linear combination and formal adjoints build new nodes;
//! nothing is resampled, so every identity is checked at jet precision when
//! the coefficients are evaluated at a point.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{MatField, VectorFieldFn};
use crate::jets::binomial;
use crate::linalg::{CJet, CMat, MatJet, ONE};

#[derive(Clone)]
pub struct MatDiffOp {
    n: usize,
    order: usize,
    node: Arc<Node>,
}

enum Node {
    Coeffs(Vec<MatField>),
    Compose(MatDiffOp, MatDiffOp),
    Combine(Complex64, MatDiffOp, Complex64, MatDiffOp),
    Adjoint(MatDiffOp),
}

impl fmt::Debug for MatDiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &*self.node {
            Node::Coeffs(_) => "coeffs",
            Node::Compose(..) => "compose",
            Node::Combine(..) => "combine",
            Node::Adjoint(_) => "adjoint",
        };
        write!(
            f,
            "MatDiffOp({}x{}, order {}, {kind})",
            self.n, self.n, self.order
        )
    }
}

fn exhausted(have: usize, need: usize, k: usize) -> Error {
    Error::JetExhausted {
        required: k + need - have,
    }
}

impl MatDiffOp {
    /// Operator from coefficients `A_0, ..., A_m` (index = derivative order).
    pub fn from_coeffs(coeffs: Vec<MatField>) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return Err(Error::Shape(
                "an operator needs at least one coefficient".into(),
            ));
        };
        let n = first.dim();
        if coeffs.iter().any(|c| c.dim() != n) {
            return Err(Error::Dimension("coefficients of different sizes".into()));
        }
        Ok(MatDiffOp {
            n,
            order: coeffs.len() - 1,
            node: Arc::new(Node::Coeffs(coeffs)),
        })
    }

    /// Multiplication by a matrix function (order 0).
    pub fn multiplication(m: MatField) -> Self {
        MatDiffOp::from_coeffs(vec![m]).expect("single coefficient")
    }

    pub fn constant(m: CMat) -> Self {
        MatDiffOp::multiplication(MatField::constant(m))
    }

    pub fn identity(n: usize) -> Self {
        MatDiffOp::constant(CMat::identity(n))
    }

    /// `I_n d^k/dq^k`.
    pub fn derivative(n: usize, k: usize) -> Self {
        let mut coeffs = vec![MatField::zeros(n); k + 1];
        coeffs[k] = MatField::identity(n);
        MatDiffOp::from_coeffs(coeffs).expect("uniform sizes")
    }

    /// `-1/2 I_n d^2/dq^2 + V(q)`.
    pub fn schrodinger(potential: MatField) -> Self {
        let n = potential.dim();
        MatDiffOp::from_coeffs(vec![
            potential,
            MatField::zeros(n),
            MatField::scaled_identity(n, -0.5),
        ])
        .expect("uniform sizes")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient jets `A_0..A_m` at `q0`, seeding leaves at order `k`.
    ///
    /// Each returned jet carries whatever derivative slots survive the
    /// operations that built this operator; a slot count that would go
    /// negative is reported as [`Error::JetExhausted`] with the `K` needed.
    pub fn coefficients(&self, q0: f64, k: usize) -> Result<Vec<MatJet>> {
        match &*self.node {
            Node::Coeffs(fields) => fields.iter().map(|f| f.eval(q0, k)).collect(),
            Node::Combine(alpha, a, beta, b) => {
                let ca = a.coefficients(q0, k)?;
                let cb = b.coefficients(q0, k)?;
                Ok((0..=self.order)
                    .map(|i| match (ca.get(i), cb.get(i)) {
                        (Some(x), Some(y)) => &x.scale(*alpha) + &y.scale(*beta),
                        (Some(x), None) => x.scale(*alpha),
                        (None, Some(y)) => y.scale(*beta),
                        (None, None) => unreachable!("order is the max of both"),
                    })
                    .collect())
            }
            Node::Compose(outer, inner) => {
                let ca = outer.coefficients(q0, k)?;
                let cb = inner.coefficients(q0, k)?;
                let mut out: Vec<Option<MatJet>> = vec![None; self.order + 1];
                for (kk, a) in ca.iter().enumerate() {
                    for (l, b) in cb.iter().enumerate() {
                        for j in 0..=kk {
                            if j > b.order() {
                                return Err(exhausted(b.order(), j, k));
                            }
                            let term = (a * &b.nth_derivative(j)?)
                                .scale(Complex64::new(binomial(kk, j), 0.0));
                            let slot = &mut out[kk + l - j];
                            *slot = Some(match slot.take() {
                                Some(acc) => &acc + &term,
                                None => term,
                            });
                        }
                    }
                }
                Ok(out
                    .into_iter()
                    .map(|c| c.expect("every index is reached"))
                    .collect())
            }
            Node::Adjoint(inner) => {
                let ca = inner.coefficients(q0, k)?;
                let mut out: Vec<Option<MatJet>> = vec![None; self.order + 1];
                for (kk, a) in ca.iter().enumerate() {
                    let adj = a.adjoint();
                    let sign = if kk % 2 == 0 { 1.0 } else { -1.0 };
                    for j in 0..=kk {
                        if j > adj.order() {
                            return Err(exhausted(adj.order(), j, k));
                        }
                        let term = adj
                            .nth_derivative(j)?
                            .scale(Complex64::new(sign * binomial(kk, j), 0.0));
                        let slot = &mut out[kk - j];
                        *slot = Some(match slot.take() {
                            Some(acc) => &acc + &term,
                            None => term,
                        });
                    }
                }
                Ok(out
                    .into_iter()
                    .map(|c| c.expect("every index is reached"))
                    .collect())
            }
        }
    }

    /// Coefficient values `A_k(q0)`.
    pub fn coefficient_values(&self, q0: f64, k: usize) -> Result<Vec<CMat>> {
        Ok(self
            .coefficients(q0, k)?
            .iter()
            .map(MatJet::value)
            .collect())
    }

    /// `sum_k A_k(q0) psi^(k)(q0)` as jets.
    pub fn apply(&self, psi: &VectorFieldFn, q0: f64, k: usize) -> Result<Vec<CJet>> {
        if psi.dim() != self.n {
            return Err(Error::Dimension(format!(
                "operator is {0}x{0}, vector has {1} components",
                self.n,
                psi.dim()
            )));
        }
        let coeffs = self.coefficients(q0, k)?;
        let u = psi.eval(q0, k)?;
        apply_to_jets(&coeffs, &u, k)
    }

    /// `self o other`, coefficients by the Leibniz rule.
    pub fn compose(&self, other: &MatDiffOp) -> Result<MatDiffOp> {
        self.check_dim(other)?;
        Ok(MatDiffOp {
            n: self.n,
            order: self.order + other.order,
            node: Arc::new(Node::Compose(self.clone(), other.clone())),
        })
    }

    /// `alpha L1 + beta L2`.
    pub fn add_scale(
        alpha: Complex64,
        l1: &MatDiffOp,
        beta: Complex64,
        l2: &MatDiffOp,
    ) -> Result<MatDiffOp> {
        l1.check_dim(l2)?;
        Ok(MatDiffOp {
            n: l1.n,
            order: l1.order.max(l2.order),
            node: Arc::new(Node::Combine(alpha, l1.clone(), beta, l2.clone())),
        })
    }

    pub fn plus(&self, other: &MatDiffOp) -> Result<MatDiffOp> {
        MatDiffOp::add_scale(ONE, self, ONE, other)
    }

    pub fn minus(&self, other: &MatDiffOp) -> Result<MatDiffOp> {
        MatDiffOp::add_scale(ONE, self, -ONE, other)
    }

    pub fn scaled(&self, s: Complex64) -> MatDiffOp {
        let zero = MatDiffOp::constant(CMat::zeros(self.n));
        MatDiffOp::add_scale(s, self, Complex64::new(0.0, 0.0), &zero).expect("same size")
    }

    /// Formal adjoint: `(A_k D^k)^+ = (-1)^k sum_j C(k,j) (A_k^+)^(j) D^(k-j)`.
    pub fn formal_adjoint(&self) -> MatDiffOp {
        MatDiffOp {
            n: self.n,
            order: self.order,
            node: Arc::new(Node::Adjoint(self.clone())),
        }
    }

    /// `op^p` by left-fold composition; `p = 0` is the identity.
    pub fn power(&self, p: usize) -> Result<MatDiffOp> {
        let mut acc = MatDiffOp::identity(self.n);
        for _ in 0..p {
            acc = acc.compose(self)?;
        }
        Ok(acc)
    }

    /// Largest Frobenius norm of the leading coefficient over `samples`.
    pub fn leading_norm(&self, samples: &[f64], k: usize) -> Result<f64> {
        let mut best: f64 = 0.0;
        for &q in samples {
            let c = self.coefficient_values(q, k)?;
            best = best.max(c[self.order].frobenius());
        }
        Ok(best)
    }

    fn check_dim(&self, other: &MatDiffOp) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "operators are {}x{} and {}x{}",
                self.n, self.n, other.n, other.n
            )));
        }
        Ok(())
    }
}

/// `sum_k A_k u^(k)` for coefficient jets and vector jets.
pub fn apply_to_jets(coeffs: &[MatJet], u: &[CJet], k: usize) -> Result<Vec<CJet>> {
    let mut acc: Option<Vec<CJet>> = None;
    for (kk, a) in coeffs.iter().enumerate() {
        let du: Vec<CJet> = u
            .iter()
            .map(|c| {
                c.nth_derivative(kk)
                    .map_err(|_| exhausted(c.order(), kk, k))
            })
            .collect::<Result<_>>()?;
        let term = a.mul_vec(&du);
        acc = Some(match acc {
            None => term,
            Some(prev) => prev.iter().zip(&term).map(|(x, y)| x + y).collect(),
        });
    }
    Ok(acc.expect("at least one coefficient"))
}

/// Size of an operator identity `lhs = rhs` over a sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    /// Max over samples and coefficients of the Frobenius norm of `lhs - rhs`.
    pub raw: f64,
    /// Same, divided per sample by the largest coefficient norm on either side.
    pub relative: f64,
    /// Sample with the largest relative residual.
    pub worst_q: f64,
}

impl Residual {
    pub fn zero() -> Self {
        Residual {
            raw: 0.0,
            relative: 0.0,
            worst_q: f64::NAN,
        }
    }
}

/// Max over samples of the Frobenius norm of every coefficient value: the
/// certificate that `op` vanishes.
pub fn residual_sup(op: &MatDiffOp, samples: &[f64], k: usize) -> Result<f64> {
    let per_sample: Vec<Result<f64>> = samples
        .par_iter()
        .map(|&q| {
            Ok(op
                .coefficient_values(q, k)?
                .iter()
                .map(CMat::frobenius)
                .fold(0.0, f64::max))
        })
        .collect();
    per_sample
        .into_iter()
        .try_fold(0.0, |acc, r| Ok(f64::max(acc, r?)))
}

/// Raw and relative size of `lhs - rhs`, coefficientwise.
pub fn residual_between(
    lhs: &MatDiffOp,
    rhs: &MatDiffOp,
    samples: &[f64],
    k: usize,
) -> Result<Residual> {
    lhs.check_dim(rhs)?;
    let per_sample: Vec<Result<(f64, f64, f64)>> = samples
        .par_iter()
        .map(|&q| {
            let l = lhs.coefficient_values(q, k)?;
            let r = rhs.coefficient_values(q, k)?;
            let zero = CMat::zeros(lhs.n);
            let mut raw: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for i in 0..l.len().max(r.len()) {
                let a = l.get(i).unwrap_or(&zero);
                let b = r.get(i).unwrap_or(&zero);
                raw = raw.max((a - b).frobenius());
                scale = scale.max(a.frobenius()).max(b.frobenius());
            }
            let rel = if scale > 0.0 { raw / scale } else { raw };
            Ok((q, raw, rel))
        })
        .collect();
    let mut out = Residual::zero();
    for r in per_sample {
        let (q, raw, rel) = r?;
        out.raw = out.raw.max(raw);
        if rel > out.relative || out.worst_q.is_nan() {
            out.relative = out.relative.max(rel);
            out.worst_q = q;
        }
    }
    Ok(out)
}
