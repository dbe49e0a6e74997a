//! Kernel of an order-`N` matrix operator by RK4 integration of the
//! companion first-order system, and the test `H ker P ⊂ ker P`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Grid;
use crate::diffops::MatDiffOp;
use crate::error::{Error, Result};
use crate::linalg::{CMat, MatJet, ZERO};

/// Trajectories whose state norm exceeds this are cut off.
pub const OVERFLOW_NORM: f64 = 1e12;
/// RK4 steps per grid interval.
pub const SUBSTEPS: usize = 4;

/// Fundamental system of `P u = 0`: column `k` of each state is trajectory
/// `k`, stacked as `(u, u', ..., u^(N-1))`.
#[derive(Debug, Clone)]
pub struct KernelBasis {
    pub n: usize,
    pub order: usize,
    /// Start point of the integration (the midpoint, possibly offset).
    pub start: f64,
    /// Nodes on the valid sub-interval, ascending.
    pub nodes: Vec<f64>,
    pub states: Vec<CMat>,
    /// Set when the integration stopped before reaching a wall.
    pub truncated: Option<(f64, f64)>,
}

impl KernelBasis {
    pub fn dim(&self) -> usize {
        self.n * self.order
    }

    /// `u_k^(j)(q)` at node `i`.
    pub fn derivative(&self, i: usize, k: usize, j: usize) -> Vec<Complex64> {
        let s = &self.states[i];
        (0..self.n).map(|c| s[(j * self.n + c, k)]).collect()
    }

    /// Basis state matrix at the start point (the identity by construction).
    pub fn initial_state(&self) -> CMat {
        CMat::identity(self.dim())
    }
}

fn coeffs_at(op: &MatDiffOp, q: f64, derivs: usize) -> Result<Vec<MatJet>> {
    let mut k = derivs + 2;
    loop {
        match op.coefficients(q, k) {
            Err(Error::JetExhausted { required }) if required > k && required < 64 => k = required,
            other => return other,
        }
    }
}

/// Companion matrix of `sum_j A_j u^(j) = 0` at `q`.
fn companion(op: &MatDiffOp, q: f64) -> Result<CMat> {
    let (n, order) = (op.dim(), op.order());
    let a = op.coefficient_values(q, order + 2)?;
    let lead_inv = a[order]
        .inverse()
        .ok_or_else(|| Error::singular(q, "leading coefficient"))?;
    let size = n * order;
    let mut m = CMat::zeros(size);
    for blk in 0..order - 1 {
        for c in 0..n {
            m[(blk * n + c, (blk + 1) * n + c)] = Complex64::new(1.0, 0.0);
        }
    }
    for (j, aj) in a.iter().take(order).enumerate() {
        let b = &lead_inv * aj;
        for r in 0..n {
            for c in 0..n {
                m[((order - 1) * n + r, j * n + c)] = -b[(r, c)];
            }
        }
    }
    if m.as_slice().iter().any(|z| !z.is_finite()) {
        return Err(Error::singular(q, "operator coefficients"));
    }
    Ok(m)
}

/// Companion matrix, or its symmetric limit across a removable singularity.
fn companion_or_limit(op: &MatDiffOp, q: f64, delta: f64) -> Result<CMat> {
    companion(op, q).or_else(|err| {
        let l = companion(op, q - delta)?;
        let r = companion(op, q + delta)?;
        let avg = (&l + &r).scale(Complex64::new(0.5, 0.0));
        if (&l - &r).max_abs() <= 1e-3 * (1.0 + avg.max_abs()) {
            Ok(avg)
        } else {
            Err(err)
        }
    })
}

fn rk4(op: &MatDiffOp, q: f64, y: &CMat, step: f64) -> Result<CMat> {
    let half = Complex64::new(0.5 * step, 0.0);
    let full = Complex64::new(step, 0.0);
    let delta = 1e-3 * step.abs();
    let k1 = &companion_or_limit(op, q, delta)? * y;
    let mid = companion_or_limit(op, q + 0.5 * step, delta)?;
    let k2 = &mid * &(y + &k1.scale(half));
    let k3 = &mid * &(y + &k2.scale(half));
    let k4 = &companion_or_limit(op, q + step, delta)? * &(y + &k3.scale(full));
    let sum =
        &(&k1 + &k2.scale(Complex64::new(2.0, 0.0))) + &(&k3.scale(Complex64::new(2.0, 0.0)) + &k4);
    Ok(y + &sum.scale(Complex64::new(step / 6.0, 0.0)))
}

/// Integrates from `start` through `targets` (monotone away from start),
/// returning the states reached before overflow or a failed evaluation.
fn sweep(op: &MatDiffOp, start: f64, targets: &[f64], h: f64) -> Vec<CMat> {
    let mut y = CMat::identity(op.dim() * op.order());
    let mut q = start;
    let mut out = Vec::with_capacity(targets.len());
    'outer: for &t in targets {
        let dist = t - q;
        let steps = ((dist.abs() / h) * SUBSTEPS as f64).ceil().max(1.0) as usize;
        let step = dist / steps as f64;
        for _ in 0..steps {
            match rk4(op, q, &y, step) {
                Ok(next) if next.frobenius() <= OVERFLOW_NORM && next.frobenius().is_finite() => {
                    y = next;
                    q += step;
                }
                _ => break 'outer,
            }
        }
        q = t;
        out.push(y.clone());
    }
    out
}

/// Basis of `ker P` on the grid nodes, integrated outward from the midpoint
/// (shifted by `h/4` when the coefficients are singular there).
pub fn kernel_basis(p: &MatDiffOp, grid: &Grid) -> Result<KernelBasis> {
    let h = grid.h();
    let mut start = grid.midpoint();
    if companion(p, start).is_err() {
        start += 0.25 * h;
        companion(p, start)?;
    }
    let points = grid.points();
    let right: Vec<f64> = points.iter().copied().filter(|&q| q > start).collect();
    let mut left: Vec<f64> = points.iter().copied().filter(|&q| q < start).collect();
    left.reverse();
    let (up, down) = rayon::join(|| sweep(p, start, &right, h), || sweep(p, start, &left, h));

    let mut nodes = Vec::with_capacity(up.len() + down.len() + 1);
    let mut states = Vec::with_capacity(nodes.capacity());
    for (q, s) in left.iter().zip(&down).rev() {
        nodes.push(*q);
        states.push(s.clone());
    }
    if points.contains(&start) {
        nodes.push(start);
        states.push(CMat::identity(p.dim() * p.order()));
    }
    for (q, s) in right.iter().zip(&up) {
        nodes.push(*q);
        states.push(s.clone());
    }
    let truncated = (down.len() < left.len() || up.len() < right.len()).then(|| {
        (
            nodes.first().copied().unwrap_or(start),
            nodes.last().copied().unwrap_or(start),
        )
    });
    Ok(KernelBasis {
        n: p.dim(),
        order: p.order(),
        start,
        nodes,
        states,
        truncated,
    })
}

/// `|H u|` is floored at this fraction of the size of its terms, so that
/// kernel elements annihilated by `H` do not divide roundoff by roundoff.
pub const W_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiResidual {
    /// Max over trajectories of `max|P H u| / max|H u|` on the valid nodes
    /// (absolute when `H u` vanishes identically).
    pub value: f64,
    pub per_trajectory: Vec<f64>,
    pub kernel_dim: usize,
    pub nodes_used: usize,
    /// Nodes where the coefficients could not be evaluated.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<f64>,
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Derivatives `u^(0..=order+extra)` of a kernel element from its state,
/// extending by differentiating `sum_j A_j u^(j) = 0`.
fn extend_derivatives(
    coeffs: &[MatJet],
    lead_inv: &CMat,
    state: &[Vec<Complex64>],
    extra: usize,
) -> Result<Vec<Vec<Complex64>>> {
    let order = coeffs.len() - 1;
    let n = lead_inv.dim();
    let mut u: Vec<Vec<Complex64>> = state.to_vec();
    for m in 0..=extra {
        let mut acc = vec![ZERO; n];
        for (j, a) in coeffs.iter().enumerate() {
            for l in 0..=m {
                if j == order && l == m {
                    continue;
                }
                let da = a
                    .deriv_value(m - l)
                    .ok_or(Error::JetExhausted { required: m + 2 })?;
                let t = da.mul_vec(&u[j + l]);
                let c = binom(m, l);
                for (x, y) in acc.iter_mut().zip(t) {
                    *x += y * c;
                }
            }
        }
        let next = lead_inv.mul_vec(&acc);
        u.push(next.into_iter().map(|z| -z).collect());
    }
    Ok(u)
}

/// `H ker P ⊂ ker P` test: `w = H u` for each basis element, then `P w`
/// via the coefficients of `P H`, with the needed derivatives of `u`
/// taken from the equation itself.
pub fn quasi_solvability_residual(
    h: &MatDiffOp,
    p: &MatDiffOp,
    basis: &KernelBasis,
) -> Result<QuasiResidual> {
    if h.dim() != p.dim() || basis.n != p.dim() || basis.order != p.order() {
        return Err(Error::Dimension("basis, H and P disagree in shape".into()));
    }
    let ph = p.compose(h)?;
    let dim = basis.dim();
    let mut max_pw = vec![0.0f64; dim];
    let mut max_w = vec![0.0f64; dim];
    let mut max_terms = vec![0.0f64; dim];
    let mut skipped = Vec::new();
    let rows: Vec<Result<Vec<(f64, f64, f64)>>> = basis
        .nodes
        .par_iter()
        .enumerate()
        .map(|(i, &q)| node_residuals(h, p, &ph, basis, i, q))
        .collect();
    for (row, &q) in rows.into_iter().zip(&basis.nodes) {
        match row {
            Ok(rows) => {
                for (k, (w, pw, terms)) in rows.into_iter().enumerate() {
                    max_w[k] = max_w[k].max(w);
                    max_pw[k] = max_pw[k].max(pw);
                    max_terms[k] = max_terms[k].max(terms);
                }
            }
            Err(Error::JetExhausted { required }) => return Err(Error::JetExhausted { required }),
            Err(_) => skipped.push(q),
        }
    }
    let per_trajectory: Vec<f64> = (0..dim)
        .map(|k| {
            let scale = max_w[k].max(W_FLOOR * max_terms[k]);
            if scale > 0.0 {
                max_pw[k] / scale
            } else {
                max_pw[k]
            }
        })
        .collect();
    let value = per_trajectory.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(QuasiResidual {
        value,
        per_trajectory,
        kernel_dim: dim,
        nodes_used: basis.nodes.len() - skipped.len(),
        skipped,
    })
}

/// `(|H u_k|, |P H u_k|, sum_j |H_j| |u_k^(j)|)` at node `i` for every trajectory.
fn node_residuals(
    h: &MatDiffOp,
    p: &MatDiffOp,
    ph: &MatDiffOp,
    basis: &KernelBasis,
    i: usize,
    q: f64,
) -> Result<Vec<(f64, f64, f64)>> {
    let order = p.order();
    let hord = h.order();
    let pc = coeffs_at(p, q, hord)?;
    let lead_inv = pc[order]
        .value()
        .inverse()
        .ok_or_else(|| Error::singular(q, "leading coefficient"))?;
    let hc = h.coefficient_values(q, hord + 2)?;
    let phc: Vec<CMat> = coeffs_at(ph, q, 0)?.iter().map(MatJet::value).collect();
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut out = Vec::with_capacity(basis.dim());
    for k in 0..basis.dim() {
        let state: Vec<Vec<Complex64>> = (0..order).map(|j| basis.derivative(i, k, j)).collect();
        let u = extend_derivatives(&pc, &lead_inv, &state, hord)?;
        let apply = |coeffs: &[CMat]| {
            let mut acc = vec![ZERO; basis.n];
            for (j, c) in coeffs.iter().enumerate() {
                for (x, y) in acc.iter_mut().zip(c.mul_vec(&u[j])) {
                    *x += y;
                }
            }
            acc
        };
        let w = apply(&hc);
        let pw = apply(&phc);
        let terms: f64 = hc
            .iter()
            .zip(&u)
            .map(|(c, uj)| c.frobenius() * norm(uj))
            .sum();
        let row = (norm(&w), norm(&pw), terms);
        if !(row.0.is_finite() && row.1.is_finite() && row.2.is_finite()) {
            return Err(Error::singular(q, "kernel residual"));
        }
        out.push(row);
    }
    Ok(out)
}
