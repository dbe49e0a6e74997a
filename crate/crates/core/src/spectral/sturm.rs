//! Lowest eigenvalues of a block-tridiagonal Hermitian matrix by Sturm
//! counting (Sylvester inertia of a block LDL^+ factorization) and
//! bisection, and eigenvectors by shifted inverse iteration.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BlockTridiag;
use crate::linalg::{CMat, ZERO};

/// Number of negative pivots of an `n x n` Hermitian matrix (LDL^+ without
/// pivoting; a zero pivot is nudged to a tiny negative value).
fn negative_pivots(m: &CMat) -> usize {
    let n = m.dim();
    let mut a = m.clone();
    let tiny = f64::EPSILON * a.max_abs().max(f64::MIN_POSITIVE);
    let mut count = 0;
    for k in 0..n {
        let mut p = a[(k, k)].re;
        if p == 0.0 {
            p = -tiny;
        }
        if p < 0.0 {
            count += 1;
        }
        for i in k + 1..n {
            let f = a[(i, k)] / p;
            for j in k + 1..n {
                let upd = f * a[(k, j)];
                a[(i, j)] -= upd;
            }
        }
    }
    count
}

fn shifted_inverse(m: &CMat) -> CMat {
    if let Some(inv) = m.inverse() {
        return inv;
    }
    let nudge = f64::EPSILON.sqrt() * m.max_abs().max(1.0);
    (m - &CMat::identity(m.dim()).scale(Complex64::new(nudge, 0.0)))
        .inverse()
        .expect("nudged block is invertible")
}

impl BlockTridiag {
    /// Number of eigenvalues strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        let b2 = self.coupling() * self.coupling();
        let shift = CMat::identity(self.n).scale(Complex64::new(sigma, 0.0));
        let mut count = 0;
        let mut prev_inv: Option<CMat> = None;
        for a in &self.diag {
            let mut d = a - &shift;
            if let Some(inv) = &prev_inv {
                d = &d - &inv.scale(Complex64::new(b2, 0.0));
            }
            count += negative_pivots(&d);
            prev_inv = Some(shifted_inverse(&d));
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let b = self.coupling().abs();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for a in &self.diag {
            for i in 0..self.n {
                let r: f64 = (0..self.n)
                    .filter(|&j| j != i)
                    .map(|j| a[(i, j)].norm())
                    .sum();
                let c = a[(i, i)].re;
                lo = lo.min(c - r - 2.0 * b);
                hi = hi.max(c + r + 2.0 * b);
            }
        }
        (lo, hi)
    }

    /// The `count` smallest eigenvalues, ascending, with multiplicity.
    pub fn lowest_eigenvalues(&self, count: usize) -> Vec<f64> {
        let count = count.min(self.size());
        let (lo0, hi0) = self.bounds();
        let mut out = Vec::with_capacity(count);
        let mut lo = lo0;
        for j in 0..count {
            let mut hi = hi0;
            let mut l = lo;
            for _ in 0..200 {
                let mid = 0.5 * (l + hi);
                if mid <= l || mid >= hi {
                    break;
                }
                if self.count_below(mid) > j {
                    hi = mid;
                } else {
                    l = mid;
                }
                if hi - l <= 4.0 * f64::EPSILON * hi.abs().max(l.abs()).max(1.0) {
                    break;
                }
            }
            let value = 0.5 * (l + hi);
            out.push(value);
            // the next eigenvalue is not below this one
            lo = l;
        }
        out
    }

    /// Solves `(A - mu I) x = rhs` by block Thomas elimination.
    pub fn solve_shifted(&self, mu: f64, rhs: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let b = self.coupling();
        let shift = CMat::identity(self.n).scale(Complex64::new(mu, 0.0));
        let m = self.diag.len();
        let mut inv: Vec<CMat> = Vec::with_capacity(m);
        let mut y: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        for k in 0..m {
            let mut d = &self.diag[k] - &shift;
            let mut rk = rhs[k].clone();
            if k > 0 {
                d = &d - &inv[k - 1].scale(Complex64::new(b * b, 0.0));
                // off-diagonal blocks are b I
                let carried = inv[k - 1].mul_vec(&y[k - 1]);
                for (r, c) in rk.iter_mut().zip(carried) {
                    *r -= c * b;
                }
            }
            inv.push(shifted_inverse(&d));
            y.push(rk);
        }
        let mut x = vec![vec![ZERO; self.n]; m];
        for k in (0..m).rev() {
            let mut rk = y[k].clone();
            if k + 1 < m {
                for (r, c) in rk.iter_mut().zip(&x[k + 1]) {
                    *r -= c * b;
                }
            }
            x[k] = inv[k].mul_vec(&rk);
        }
        x
    }

    /// Eigenvector for an eigenvalue estimate, by a few steps of inverse
    /// iteration from a seeded random start. Normalized to unit 2-norm.
    pub fn eigenvector(&self, lambda: f64, seed: u64) -> Vec<Vec<Complex64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = self.bounds().1.abs().max(self.bounds().0.abs()).max(1.0);
        let mu = lambda - 1e-10 * scale;
        let mut x: Vec<Vec<Complex64>> = (0..self.diag.len())
            .map(|_| {
                (0..self.n)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        for _ in 0..3 {
            x = self.solve_shifted(mu, &x);
            let norm = x.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in x.iter_mut().flatten() {
                *z /= norm;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::super::eigen::eigensolve;
    use super::super::{discretize, Grid};
    use crate::diffops::MatDiffOp;
    use crate::fields::{MatField, ScalarField};

    #[test]
    fn sturm_matches_dense() {
        let v = MatField::from_fn(2, |q, k| {
            let s = ScalarField::parse("q^2/2").unwrap();
            let c = ScalarField::parse("0.3*sin(q)").unwrap();
            let pf = crate::pauli::PauliField::new([
                s,
                c.clone(),
                c.scaled(0.5),
                ScalarField::parse("0.2").unwrap(),
            ]);
            pf.to_matrix(q, k)
        });
        let h = MatDiffOp::schrodinger(v);
        let bt = discretize(&h, &Grid::new(-5.0, 5.0, 60).unwrap())
            .unwrap()
            .matrix;
        let dense = eigensolve(&bt.to_dense(), false).unwrap().values;
        let low = bt.lowest_eigenvalues(10);
        for (a, b) in low.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "{a} vs {b}");
        }
        assert_eq!(bt.count_below(dense[4] + 1e-9), 5);
    }

    #[test]
    fn inverse_iteration_gives_eigenvectors() {
        let h = MatDiffOp::schrodinger(MatField::scalar(1, ScalarField::parse("q^2/2").unwrap()));
        let bt = discretize(&h, &Grid::new(-6.0, 6.0, 200).unwrap())
            .unwrap()
            .matrix;
        let lam = bt.lowest_eigenvalues(3);
        for (j, &l) in lam.iter().enumerate() {
            let x = bt.eigenvector(l, j as u64);
            let flat: Vec<_> = x.into_iter().flatten().collect();
            let ax = bt.mul_vec(&flat);
            let r: f64 = ax
                .iter()
                .zip(&flat)
                .map(|(a, v)| (a - v * l).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(r < 1e-8, "level {j}: {r}");
        }
    }
}
