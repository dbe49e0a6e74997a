//! Dense Hermitian eigensolver: Householder reduction to a complex
//! tridiagonal matrix, a diagonal phase change to a real symmetric one,
//! then implicit QL.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMat, ONE, ZERO};

/// Hermiticity tolerance, relative to the largest entry.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector of `values[j]`.
    pub vectors: Option<CMat>,
}

/// All eigenvalues (and optionally orthonormal eigenvectors) of a
/// Hermitian matrix.
pub fn eigensolve(mat: &CMat, vectors: bool) -> Result<Eigen> {
    let n = mat.dim();
    let scale = mat.max_abs().max(f64::MIN_POSITIVE);
    let dev = mat.hermitian_deviation();
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(dev));
    }
    if n == 0 {
        return Ok(Eigen {
            values: Vec::new(),
            vectors: vectors.then(|| CMat::zeros(0)),
        });
    }
    let (diag, off, q) = tridiagonalize(mat, vectors);

    // phases making the subdiagonal real and nonnegative
    let mut phase = vec![ONE; n];
    let mut e = vec![0.0; n];
    for k in 0..n - 1 {
        let r = off[k].norm();
        e[k + 1] = r;
        phase[k + 1] = if r > 0.0 {
            phase[k] * off[k] / r
        } else {
            phase[k]
        };
    }
    let mut d = diag;
    let mut z = if vectors {
        Some(identity_real(n))
    } else {
        None
    };
    tql2(&mut d, &mut e, z.as_mut())?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = z.map(|z| {
        let q = q.expect("accumulated when vectors are requested");
        CMat::from_fn(n, |i, j| {
            let col = order[j];
            (0..n).map(|k| q[(i, k)] * phase[k] * z[k * n + col]).sum()
        })
    });
    Ok(Eigen { values, vectors })
}

fn identity_real(n: usize) -> Vec<f64> {
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    z
}

/// `A = Q T Q^+` with `T` Hermitian tridiagonal; returns the real diagonal,
/// the subdiagonal `T[k+1][k]` and optionally `Q`.
fn tridiagonalize(mat: &CMat, accumulate: bool) -> (Vec<f64>, Vec<Complex64>, Option<CMat>) {
    let n = mat.dim();
    let mut a = mat.clone();
    let mut q = accumulate.then(|| CMat::identity(n));
    let mut v = vec![ZERO; n];
    let mut p = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let norm: f64 = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let unit = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -unit * norm;
        for i in 0..n {
            v[i] = if i > k { a[(i, k)] } else { ZERO };
        }
        v[k + 1] -= alpha;
        let vn: f64 = v[k + 1..].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for z in &mut v[k + 1..] {
            *z /= vn;
        }
        // A <- H A H, H = I - 2 v v^+, acting on rows/cols k+1..n
        for i in k + 1..n {
            p[i] = (k + 1..n).map(|j| a[(i, j)] * v[j]).sum();
        }
        let kk: Complex64 = (k + 1..n).map(|i| v[i].conj() * p[i]).sum();
        let kk = kk.re;
        for i in k + 1..n {
            p[i] -= v[i] * kk;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let upd = v[i] * p[j].conj() + p[i] * v[j].conj();
                a[(i, j)] -= upd * 2.0;
            }
        }
        a[(k + 1, k)] = alpha;
        a[(k, k + 1)] = alpha.conj();
        for i in k + 2..n {
            a[(i, k)] = ZERO;
            a[(k, i)] = ZERO;
        }
        if let Some(q) = q.as_mut() {
            // Q <- Q H
            for i in 0..n {
                let s: Complex64 = (k + 1..n).map(|j| q[(i, j)] * v[j]).sum();
                for j in k + 1..n {
                    q[(i, j)] -= s * v[j].conj() * 2.0;
                }
            }
        }
    }
    let diag = (0..n).map(|i| a[(i, i)].re).collect();
    let off = (0..n.saturating_sub(1)).map(|k| a[(k + 1, k)]).collect();
    (diag, off, q)
}

/// Implicit QL on a real symmetric tridiagonal matrix (diagonal `d`,
/// subdiagonal in `e[1..]`); rotations are accumulated into row-major `z`.
fn tql2(d: &mut [f64], e: &mut [f64], mut z: Option<&mut Vec<f64>>) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::Shape("eigenvalue iteration did not converge".into()));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        for k in 0..n {
                            let zk1 = z[k * n + i + 1];
                            let zk = z[k * n + i];
                            z[k * n + i + 1] = s * zk + c * zk1;
                            z[k * n + i] = c * zk - s * zk1;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
