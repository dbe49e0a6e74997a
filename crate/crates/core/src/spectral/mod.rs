//! Finite-difference spectra of matrix Schrödinger operators, spectrum
//! matching, kernels of supercharges and the quasi-solvability test.
//!
//! Results here are numerical evidence on a Dirichlet box, limited to
//! low-lying levels: truncation to a finite box perturbs levels near the
//! walls and near the continuum edge.

mod eigen;
mod kernel;
mod matching;
mod sturm;

pub use eigen::{eigensolve, Eigen, HERMITIAN_TOL};
pub use kernel::{kernel_basis, quasi_solvability_residual, KernelBasis, QuasiResidual};
pub use matching::{match_spectra, Level, MatchedPair, SpectralReport};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diffops::MatDiffOp;
use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Uniform grid with `m` interior points on `[a, b]`, `h = (b - a)/(m + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub a: f64,
    pub b: f64,
    pub m: usize,
}

pub const MIN_GRID_POINTS: usize = 16;

impl Grid {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidSpec(format!(
                "grid needs finite a < b, got [{a}, {b}]"
            )));
        }
        if m < MIN_GRID_POINTS {
            return Err(Error::InvalidSpec(format!(
                "grid needs at least {MIN_GRID_POINTS} interior points, got {m}"
            )));
        }
        Ok(Grid { a, b, m })
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / (self.m + 1) as f64
    }

    /// Interior points `a + i h`, `i = 1..=m`.
    pub fn points(&self) -> Vec<f64> {
        let h = self.h();
        (1..=self.m).map(|i| self.a + i as f64 * h).collect()
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }
}

/// Hermitian block-tridiagonal matrix: `n x n` diagonal blocks, constant
/// off-diagonal blocks `coupling * I`. Unknowns are interleaved by grid point.
#[derive(Debug, Clone)]
pub struct BlockTridiag {
    pub n: usize,
    pub diag: Vec<CMat>,
    h: f64,
}

impl BlockTridiag {
    /// Off-diagonal scalar, `-1/(2 h²)`.
    pub fn coupling(&self) -> f64 {
        -0.5 / (self.h * self.h)
    }

    pub fn size(&self) -> usize {
        self.n * self.diag.len()
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(self.size());
        let b = Complex64::new(self.coupling(), 0.0);
        for (k, block) in self.diag.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    out[(k * n + i, k * n + j)] = block[(i, j)];
                }
                if k + 1 < self.diag.len() {
                    out[(k * n + i, (k + 1) * n + i)] = b;
                    out[((k + 1) * n + i, k * n + i)] = b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let m = self.diag.len();
        let b = self.coupling();
        let mut out = vec![Complex64::new(0.0, 0.0); n * m];
        for k in 0..m {
            let xk = &x[k * n..(k + 1) * n];
            let yk = self.diag[k].mul_vec(xk);
            for i in 0..n {
                let mut v = yk[i];
                if k > 0 {
                    v += x[(k - 1) * n + i] * b;
                }
                if k + 1 < m {
                    v += x[(k + 1) * n + i] * b;
                }
                out[k * n + i] = v;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Discretization {
    pub matrix: BlockTridiag,
    /// Nodes where the potential had to be taken as the symmetric limit
    /// (removable singularity of the construction).
    pub removable: Vec<f64>,
}

const SHAPE_TOL: f64 = 1e-12;
const VALUE_ORDER: usize = 4;

fn potential_at(h: &MatDiffOp, q: f64) -> Result<CMat> {
    let c = h.coefficient_values(q, VALUE_ORDER)?;
    Ok(c[0].clone())
}

/// Central second differences for `-1/2 d²`, Dirichlet walls at `a`, `b`,
/// potential sampled at the interior points.
pub fn discretize(h: &MatDiffOp, grid: &Grid) -> Result<Discretization> {
    let n = h.dim();
    if h.order() != 2 {
        return Err(Error::Shape(
            "not a Schrödinger operator (order != 2)".into(),
        ));
    }
    let probe = grid.midpoint() + 0.123_456 * grid.h();
    let c = h.coefficient_values(probe, VALUE_ORDER)?;
    let half = CMat::identity(n).scale(Complex64::new(-0.5, 0.0));
    if (&c[2] - &half).max_abs() > SHAPE_TOL || c[1].max_abs() > SHAPE_TOL {
        return Err(Error::Shape("not of the form -1/2 d² + V".into()));
    }

    let kinetic = CMat::identity(n).scale(Complex64::new(1.0 / (grid.h() * grid.h()), 0.0));
    let delta = 1e-3 * grid.h();
    let mut diag = Vec::with_capacity(grid.m);
    let mut bad = Vec::new();
    let mut removable = Vec::new();
    for q in grid.points() {
        let v = match potential_at(h, q) {
            Ok(v) if v.as_slice().iter().all(|z| z.is_finite()) => Some(v),
            Ok(_) | Err(_) => {
                // symmetric limit across a removable singularity
                match (potential_at(h, q - delta), potential_at(h, q + delta)) {
                    (Ok(l), Ok(r)) => {
                        let avg = (&l + &r).scale(Complex64::new(0.5, 0.0));
                        let jump = (&l - &r).max_abs();
                        if avg.as_slice().iter().all(|z| z.is_finite())
                            && jump <= 1e-3 * (1.0 + avg.max_abs())
                        {
                            removable.push(q);
                            Some(avg)
                        } else {
                            None
                        }
                    }
                    _ => None,
                }
            }
        };
        match v {
            Some(v) => {
                let dev = v.hermitian_deviation();
                if dev > HERMITIAN_TOL * v.max_abs().max(1.0) {
                    return Err(Error::NotHermitian(dev));
                }
                diag.push(&v + &kinetic);
            }
            None => {
                bad.push(q);
                diag.push(kinetic.clone());
            }
        }
    }
    if !bad.is_empty() {
        return Err(Error::SingularPotential { points: bad });
    }
    Ok(Discretization {
        matrix: BlockTridiag {
            n,
            diag,
            h: grid.h(),
        },
        removable,
    })
}

/// Relative eigenvector magnitude at the nodes next to the walls above
/// which a level is reported as leaking.
pub const WALL_LEAK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Per level: eigenvector magnitude next to the walls relative to its peak.
    pub wall_magnitude: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub removable_points: Vec<f64>,
}

/// Lowest `levels` eigenvalues of a discretized Hamiltonian and the wall
/// magnitude of each eigenvector.
pub fn side_spectrum(h: &MatDiffOp, grid: &Grid, levels: usize, seed: u64) -> Result<SideSpectrum> {
    let disc = discretize(h, grid)?;
    let bt = &disc.matrix;
    let eigenvalues = bt.lowest_eigenvalues(levels);
    let wall_magnitude = eigenvalues
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            let x = bt.eigenvector(l, seed.wrapping_add(j as u64));
            let norms: Vec<f64> = x
                .iter()
                .map(|b| b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
                .collect();
            let peak = norms.iter().fold(0.0f64, |m, v| m.max(*v));
            let edge = norms[0].max(norms[norms.len() - 1]);
            if peak > 0.0 {
                edge / peak
            } else {
                0.0
            }
        })
        .collect();
    Ok(SideSpectrum {
        eigenvalues,
        wall_magnitude,
        removable_points: disc.removable,
    })
}

/// Both spectra, their matching and wall-leakage warnings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRun {
    pub grid: Grid,
    pub levels: usize,
    pub tol: f64,
    pub plus: SideSpectrum,
    pub minus: SideSpectrum,
    pub matching: SpectralReport,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub fn run_spectrum(
    hplus: &MatDiffOp,
    hminus: &MatDiffOp,
    grid: &Grid,
    levels: usize,
    tol: f64,
    seed: u64,
) -> Result<SpectrumRun> {
    let (plus, minus) = rayon::join(
        || side_spectrum(hplus, grid, levels, seed),
        || side_spectrum(hminus, grid, levels, seed.wrapping_add(1 << 32)),
    );
    let (plus, minus) = (plus?, minus?);
    let matching = match_spectra(&plus.eigenvalues, &minus.eigenvalues, tol, levels);
    let mut warnings = Vec::new();
    for (name, side) in [("H+", &plus), ("H-", &minus)] {
        let leaking: Vec<String> = side
            .wall_magnitude
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > WALL_LEAK_TOL)
            .map(|(j, m)| format!("{j} ({m:.1e})"))
            .collect();
        if !leaking.is_empty() {
            warnings.push(format!(
                "wall leakage on {name}: levels {} exceed relative magnitude {WALL_LEAK_TOL:e} next to the walls; widen the box",
                leaking.join(", ")
            ));
        }
        if !side.removable_points.is_empty() {
            warnings.push(format!(
                "{name}: potential taken as a symmetric limit at q = {:?}",
                side.removable_points
            ));
        }
    }
    Ok(SpectrumRun {
        grid: *grid,
        levels,
        tol,
        plus,
        minus,
        matching,
        warnings,
    })
}
