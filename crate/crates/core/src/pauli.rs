//! Pauli decomposition of Hermitian 2x2 matrices and matrix-valued functions.
//!
//! A real 4-vector `(c0, c1, c2, c3)` stands for `c0 I + c1 s1 + c2 s2 + c3 s3`,
//! which is Hermitian for any real components.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fields::{MatField, ScalarField};
use crate::jets::Jet;
use crate::linalg::{CJet, CMat, MatJet, I, ONE, ZERO};

/// `sigma_mu` as a dense matrix, `mu = 0..=3`.
pub fn sigma(mu: usize) -> CMat {
    let rows: [[Complex64; 2]; 2] = match mu {
        0 => [[ONE, ZERO], [ZERO, ONE]],
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, -I], [I, ZERO]],
        3 => [[ONE, ZERO], [ZERO, -ONE]],
        _ => panic!("Pauli index out of range: {mu}"),
    };
    CMat::from_fn(2, |i, j| rows[i][j])
}

/// Levi-Civita symbol on `{1, 2, 3}`.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (1, 2, 3) | (2, 3, 1) | (3, 1, 2) => 1.0,
        (1, 3, 2) | (3, 2, 1) | (2, 1, 3) => -1.0,
        _ => 0.0,
    }
}

/// Constant Hermitian matrix in Pauli form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct PauliConst {
    c: [f64; 4],
    norm: f64,
}

impl From<[f64; 4]> for PauliConst {
    fn from(c: [f64; 4]) -> Self {
        PauliConst::new(c)
    }
}

impl From<PauliConst> for [f64; 4] {
    fn from(p: PauliConst) -> Self {
        p.c
    }
}

impl PauliConst {
    pub fn new(c: [f64; 4]) -> Self {
        let norm = (c[1] * c[1] + c[2] * c[2] + c[3] * c[3]).sqrt();
        PauliConst { c, norm }
    }

    pub fn from_parts(scalar: f64, vector: [f64; 3]) -> Self {
        PauliConst::new([scalar, vector[0], vector[1], vector[2]])
    }

    pub fn components(&self) -> [f64; 4] {
        self.c
    }

    pub fn scalar(&self) -> f64 {
        self.c[0]
    }

    pub fn vector(&self) -> [f64; 3] {
        [self.c[1], self.c[2], self.c[3]]
    }

    /// `sqrt(c1^2 + c2^2 + c3^2)`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Product of two Pauli-form matrices:
    /// `(a0 b0 + a.b) I + (a0 b + b0 a).s + i (a x b).s`.
    pub fn product(&self, other: &PauliConst) -> ComplexPauli {
        let (a, b) = (self.c, other.c);
        let mut out = [ZERO; 4];
        out[0] = Complex64::new(a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3], 0.0);
        for i in 1..=3 {
            let mut cross = 0.0;
            for j in 1..=3 {
                for k in 1..=3 {
                    cross += levi_civita(i, j, k) * a[j] * b[k];
                }
            }
            out[i] = Complex64::new(a[0] * b[i] + a[i] * b[0], cross);
        }
        ComplexPauli(out)
    }

    pub fn to_cmat(&self) -> CMat {
        ComplexPauli(self.c.map(|x| Complex64::new(x, 0.0))).to_cmat()
    }

    pub fn to_matrix(&self, q0: f64, order: usize) -> Mat2Jet {
        MatJet::constant(&self.to_cmat(), q0, order)
    }
}

pub use crate::linalg::Mat2Jet;

/// General complex 2x2 matrix in Pauli form, `sum z_mu s_mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPauli(pub [Complex64; 4]);

impl ComplexPauli {
    pub fn to_cmat(&self) -> CMat {
        let z = self.0;
        CMat::from_fn(2, |i, j| match (i, j) {
            (0, 0) => z[0] + z[3],
            (0, 1) => z[1] - I * z[2],
            (1, 0) => z[1] + I * z[2],
            _ => z[0] - z[3],
        })
    }

    /// Hermitian (real-component) part and the anti-Hermitian cross part.
    pub fn split(&self) -> (PauliConst, [f64; 4]) {
        (PauliConst::new(self.0.map(|z| z.re)), self.0.map(|z| z.im))
    }
}

/// Hermitian 2x2 matrix-valued function `f0 I + sum fi si` with real `f_mu`.
#[derive(Clone, Debug)]
pub struct PauliField {
    pub components: [ScalarField; 4],
}

impl PauliField {
    pub fn new(components: [ScalarField; 4]) -> Self {
        PauliField { components }
    }

    pub fn constant(c: &PauliConst) -> Self {
        PauliField::new(c.components().map(ScalarField::constant))
    }

    /// `scalar I + vector_part(q) * (n . s)`, the shape every constructed
    /// system has: the traceless part is aligned with a fixed direction.
    pub fn aligned(scalar: ScalarField, vector_part: ScalarField, direction: [f64; 3]) -> Self {
        let comp = |c: f64| vector_part.scaled(c);
        PauliField::new([
            scalar,
            comp(direction[0]),
            comp(direction[1]),
            comp(direction[2]),
        ])
    }

    pub fn component(&self, mu: usize) -> &ScalarField {
        &self.components[mu]
    }

    /// Component jets at `q0`.
    pub fn eval(&self, q0: f64, order: usize) -> Result<[Jet; 4]> {
        let c = &self.components;
        Ok([
            c[0].eval(q0, order)?,
            c[1].eval(q0, order)?,
            c[2].eval(q0, order)?,
            c[3].eval(q0, order)?,
        ])
    }

    /// Entrywise assembly `[[f0+f3, f1-i f2], [f1+i f2, f0-f3]]`.
    pub fn to_matrix(&self, q0: f64, order: usize) -> Result<Mat2Jet> {
        let [f0, f1, f2, f3] = self.eval(q0, order)?;
        assemble(&f0, &f1, &f2, &f3)
    }

    pub fn to_mat_field(&self) -> MatField {
        let me = self.clone();
        MatField::from_fn(2, move |q, k| me.to_matrix(q, k))
    }
}

fn assemble(f0: &Jet, f1: &Jet, f2: &Jet, f3: &Jet) -> Result<Mat2Jet> {
    MatJet::from_entries(
        2,
        vec![
            CJet::real(f0 + f3),
            CJet {
                re: f1.clone(),
                im: -f2,
            },
            CJet {
                re: f1.clone(),
                im: f2.clone(),
            },
            CJet::real(f0 - f3),
        ],
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianCheck {
    pub hermitian: bool,
    pub max_deviation: f64,
}

/// Compares the value slot of `m` with its conjugate transpose.
pub fn hermitian_check(m: &MatJet, tol: f64) -> HermitianCheck {
    let dev = m.value().hermitian_deviation();
    HermitianCheck {
        hermitian: dev <= tol,
        max_deviation: dev,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat;

    fn close(a: &CMat, b: &CMat, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn pauli_products() {
        let e1 = PauliConst::new([0.0, 1.0, 0.0, 0.0]);
        let e2 = PauliConst::new([0.0, 0.0, 1.0, 0.0]);
        let e3 = PauliConst::new([0.0, 0.0, 0.0, 1.0]);
        // s1 s2 = i s3
        assert_eq!(e1.product(&e2).0, [ZERO, ZERO, ZERO, I]);
        assert_eq!(e3.product(&e3).0, [ONE, ZERO, ZERO, ZERO]);
        let c = PauliConst::new([0.0, 0.3, -1.2, 0.7]);
        let sq = c.product(&c);
        assert!((sq.0[0].re - c.norm() * c.norm()).abs() < 1e-15);
        assert!(sq.0[1..].iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn constant_matrices() {
        let id = PauliConst::new([1.0, 0.0, 0.0, 0.0]).to_matrix(0.3, 5);
        assert_eq!(id.value(), CMat::identity(2));
        let s3 = PauliConst::new([0.0, 0.0, 0.0, 1.0]).to_matrix(0.3, 5);
        assert_eq!(s3.value(), sigma(3));
        let s2 = PauliConst::new([0.0, 0.0, 1.0, 0.0]).to_matrix(0.3, 5);
        assert!(close(
            &s2.value(),
            &CMat::from_fn(2, |i, j| [[ZERO, -I], [I, ZERO]][i][j]),
            0.0
        ));
    }

    #[test]
    fn hermitian_checks() {
        let f = PauliField::new([
            ScalarField::parse("q^2").unwrap(),
            ScalarField::parse("sin(q)").unwrap(),
            ScalarField::parse("exp(q)").unwrap(),
            ScalarField::parse("-q").unwrap(),
        ]);
        let m = f.to_matrix(0.7, 5).unwrap();
        assert!(hermitian_check(&m, 1e-14).hermitian);

        let bad = MatJet::constant(&CMat::from_real(&[&[0.0, 1.0], &[2.0, 0.0]]), 0.0, 5);
        let r = hermitian_check(&bad, 1e-14);
        assert!(!r.hermitian);
        assert_eq!(r.max_deviation, 1.0);

        let imag_diag = MatJet::constant(
            &CMat::from_fn(2, |i, j| if i + j == 0 { I } else { ZERO }),
            0.0,
            5,
        );
        assert!(!hermitian_check(&imag_diag, 1e-14).hermitian);
    }

    #[test]
    fn product_agrees_with_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let a = PauliConst::new(std::array::from_fn(|_| rng.gen_range(-2.0..2.0)));
            let b = PauliConst::new(std::array::from_fn(|_| rng.gen_range(-2.0..2.0)));
            let direct = &a.to_cmat() * &b.to_cmat();
            assert!(close(&a.product(&b).to_cmat(), &direct, 1e-14));
        }
    }

    #[test]
    fn cross_part_vanishes_only_for_parallel_vectors() {
        let n = [0.3, -0.4, 1.1];
        let a = PauliConst::from_parts(0.7, n.map(|x| 2.5 * x));
        let b = PauliConst::from_parts(-1.3, n.map(|x| -0.8 * x));
        let (_, cross) = a.product(&b).split();
        assert!(cross.iter().all(|x| x.abs() < 1e-15));
        let c = PauliConst::from_parts(0.0, [0.3, -0.4, 1.0]);
        let (_, cross) = a.product(&c).split();
        assert!(cross.iter().any(|x| x.abs() > 1e-3));
    }
}
