//! Dense complex matrices, complex jets, and matrices of complex jets.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jets::Jet;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    n: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        CMat {
            n,
            data: vec![ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        CMat { n, data }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("matrix rows must form a square".into()));
        }
        Ok(CMat {
            n,
            data: rows.concat(),
        })
    }

    pub fn from_real(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        CMat::from_fn(n, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn scale(&self, s: Complex64) -> CMat {
        CMat {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from the conjugate transpose.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Option<CMat> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = CMat::identity(n);
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let piv =
                (col..n).max_by(|&r, &s| a[(r, col)].norm().total_cmp(&a[(s, col)].norm()))?;
            if a[(piv, col)].norm() <= 1e-14 * scale {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                    inv.data.swap(piv * n + j, col * n + j);
                }
            }
            let d = a[(col, col)].inv();
            for j in 0..n {
                a[(col, j)] *= d;
                inv[(col, j)] *= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == ZERO {
                    continue;
                }
                for j in 0..n {
                    let (ac, ic) = (a[(col, j)], inv[(col, j)]);
                    a[(r, j)] -= f * ac;
                    inv[(r, j)] -= f * ic;
                }
            }
        }
        Some(inv)
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!(self.n, rhs.n);
        CMat {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!(self.n, rhs.n);
        CMat {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

/// Complex-valued jet stored as a pair of real jets.
#[derive(Debug, Clone, PartialEq)]
pub struct CJet {
    pub re: Jet,
    pub im: Jet,
}

impl CJet {
    pub fn real(re: Jet) -> Self {
        let im = Jet::zero(re.center(), re.order());
        CJet { re, im }
    }

    pub fn constant(z: Complex64, q0: f64, order: usize) -> Self {
        CJet {
            re: Jet::constant(z.re, q0, order),
            im: Jet::constant(z.im, q0, order),
        }
    }

    pub fn zero(q0: f64, order: usize) -> Self {
        CJet::constant(ZERO, q0, order)
    }

    pub fn order(&self) -> usize {
        self.re.order().min(self.im.order())
    }

    pub fn center(&self) -> f64 {
        self.re.center()
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    /// `m`-th derivative value.
    pub fn deriv(&self, m: usize) -> Option<Complex64> {
        Some(Complex64::new(self.re.deriv(m)?, self.im.deriv(m)?))
    }

    pub fn conj(&self) -> CJet {
        CJet {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    pub fn nth_derivative(&self, k: usize) -> Result<CJet> {
        Ok(CJet {
            re: self.re.nth_derivative(k)?,
            im: self.im.nth_derivative(k)?,
        })
    }

    pub fn scale(&self, s: Complex64) -> CJet {
        CJet {
            re: &self.re.scale(s.re) - &self.im.scale(s.im),
            im: &self.re.scale(s.im) + &self.im.scale(s.re),
        }
    }

    pub fn truncate(&self, order: usize) -> CJet {
        CJet {
            re: self.re.truncate(order),
            im: self.im.truncate(order),
        }
    }
}

impl Add for &CJet {
    type Output = CJet;
    fn add(self, rhs: &CJet) -> CJet {
        CJet {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl Sub for &CJet {
    type Output = CJet;
    fn sub(self, rhs: &CJet) -> CJet {
        CJet {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

impl Mul for &CJet {
    type Output = CJet;
    fn mul(self, rhs: &CJet) -> CJet {
        CJet {
            re: &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            im: &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        }
    }
}

/// Square matrix of complex jets sharing one center.
#[derive(Debug, Clone, PartialEq)]
pub struct MatJet {
    n: usize,
    entries: Vec<CJet>,
}

/// The 2x2 specialization used for Pauli-decomposed fields.
pub type Mat2Jet = MatJet;

impl MatJet {
    pub fn from_entries(n: usize, entries: Vec<CJet>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Dimension(format!(
                "{} entries for a {n}x{n} matrix",
                entries.len()
            )));
        }
        Ok(MatJet { n, entries })
    }

    pub fn constant(m: &CMat, q0: f64, order: usize) -> Self {
        MatJet {
            n: m.dim(),
            entries: m
                .as_slice()
                .iter()
                .map(|z| CJet::constant(*z, q0, order))
                .collect(),
        }
    }

    pub fn identity(n: usize, q0: f64, order: usize) -> Self {
        MatJet::constant(&CMat::identity(n), q0, order)
    }

    pub fn zeros(n: usize, q0: f64, order: usize) -> Self {
        MatJet::constant(&CMat::zeros(n), q0, order)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.entries.iter().map(CJet::order).min().unwrap_or(0)
    }

    pub fn center(&self) -> f64 {
        self.entries[0].center()
    }

    pub fn entry(&self, i: usize, j: usize) -> &CJet {
        &self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[CJet] {
        &self.entries
    }

    pub fn value(&self) -> CMat {
        CMat::from_fn(self.n, |i, j| self.entry(i, j).value())
    }

    /// Matrix of `m`-th derivative values.
    pub fn deriv_value(&self, m: usize) -> Option<CMat> {
        let mut out = CMat::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out[(i, j)] = self.entry(i, j).deriv(m)?;
            }
        }
        Some(out)
    }

    pub fn nth_derivative(&self, k: usize) -> Result<MatJet> {
        Ok(MatJet {
            n: self.n,
            entries: self
                .entries
                .iter()
                .map(|e| e.nth_derivative(k))
                .collect::<Result<_>>()?,
        })
    }

    pub fn adjoint(&self) -> MatJet {
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(self.entry(j, i).conj());
            }
        }
        MatJet { n, entries }
    }

    pub fn scale(&self, s: Complex64) -> MatJet {
        MatJet {
            n: self.n,
            entries: self.entries.iter().map(|e| e.scale(s)).collect(),
        }
    }

    pub fn truncate(&self, order: usize) -> MatJet {
        MatJet {
            n: self.n,
            entries: self.entries.iter().map(|e| e.truncate(order)).collect(),
        }
    }

    /// Matrix-vector product with a vector of complex jets.
    pub fn mul_vec(&self, v: &[CJet]) -> Vec<CJet> {
        (0..self.n)
            .map(|i| {
                let mut acc = self.entry(i, 0) * &v[0];
                for j in 1..self.n {
                    acc = &acc + &(self.entry(i, j) * &v[j]);
                }
                acc
            })
            .collect()
    }
}

impl Add for &MatJet {
    type Output = MatJet;
    fn add(self, rhs: &MatJet) -> MatJet {
        assert_eq!(self.n, rhs.n);
        MatJet {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &MatJet {
    type Output = MatJet;
    fn sub(self, rhs: &MatJet) -> MatJet {
        assert_eq!(self.n, rhs.n);
        MatJet {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &MatJet {
    type Output = MatJet;
    fn mul(self, rhs: &MatJet) -> MatJet {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = self.entry(i, 0) * rhs.entry(0, j);
                for k in 1..n {
                    acc = &acc + &(self.entry(i, k) * rhs.entry(k, j));
                }
                entries.push(acc);
            }
        }
        MatJet { n, entries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let a = CMat::from_fn(3, |i, j| {
            Complex64::new(
                (i + 2 * j) as f64 + if i == j { 4.0 } else { 0.5 },
                i as f64 - j as f64,
            )
        });
        let inv = a.inverse().unwrap();
        let prod = &a * &inv;
        assert!((&prod - &CMat::identity(3)).max_abs() < 1e-12);
        assert!(CMat::zeros(2).inverse().is_none());
    }

    #[test]
    fn complex_jet_product() {
        // (q + i)(q - i) = q^2 + 1
        let q = Jet::variable(0.5, 3);
        let a = CJet {
            re: q.clone(),
            im: Jet::constant(1.0, 0.5, 3),
        };
        let p = &a * &a.conj();
        assert_eq!(p.re.coeffs(), &[1.25, 1.0, 2.0, 0.0]);
        assert!(p.im.coeffs().iter().all(|x| *x == 0.0));
    }
}
