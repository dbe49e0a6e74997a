//! Verifier for N-fold supersymmetry of an arbitrary `n x n` pair.
//!
//! A pair `(H+, H-, P-, P+)` with constant Hermitian `C_0 .. C_{N-1}` is
//! N-fold supersymmetric when
//!
//! ```text
//! P- H- = H+ P-,   P+ H+ = H- P+,
//! P- P+ = 2^N [ (H+ + C0)^N + sum_{k=1}^{N-1} C_k (H+ + C0)^{N-k-1} ]
//! ```
//!
//! and the same with `+` and `-` swapped.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diffops::{residual_between, MatDiffOp, Residual};
use crate::error::{Error, Result};
use crate::fields::{MatField, ScalarField, VectorFieldFn};
use crate::grid::Domain;
use crate::jets::{Elementary, Jet};
use crate::linalg::{CMat, ZERO};
use crate::susy2::SusySystem;

/// Which supercharge stands on the left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `P- H- - H+ P-` and `P- P+` against `H+`.
    Minus,
    /// `P+ H+ - H- P+` and `P+ P-` against `H-`.
    Plus,
}

#[derive(Debug, Clone)]
pub struct NfoldPair {
    n: usize,
    fold: usize,
    pub hplus: MatDiffOp,
    pub hminus: MatDiffOp,
    pub pminus: MatDiffOp,
    pub pplus: MatDiffOp,
    pub cmats: Vec<CMat>,
}

const HERMITIAN_TOL: f64 = 1e-12;

impl NfoldPair {
    pub fn new(
        hplus: MatDiffOp,
        hminus: MatDiffOp,
        pminus: MatDiffOp,
        pplus: MatDiffOp,
        cmats: Vec<CMat>,
    ) -> Result<Self> {
        let n = hplus.dim();
        let fold = pminus.order();
        for op in [&hminus, &pminus, &pplus] {
            if op.dim() != n {
                return Err(Error::Dimension(format!(
                    "all operators must be {n}x{n}, found {0}x{0}",
                    op.dim()
                )));
            }
        }
        if hplus.order() != 2 || hminus.order() != 2 {
            return Err(Error::Shape("Hamiltonians must be second order".into()));
        }
        if fold == 0 || pplus.order() != fold {
            return Err(Error::Shape(format!(
                "supercharges must share a positive order, got {fold} and {}",
                pplus.order()
            )));
        }
        if cmats.len() != fold {
            return Err(Error::Shape(format!(
                "need {fold} constant matrices C_0..C_{}, got {}",
                fold - 1,
                cmats.len()
            )));
        }
        for (k, c) in cmats.iter().enumerate() {
            if c.dim() != n {
                return Err(Error::Dimension(format!(
                    "C_{k} is {0}x{0}, expected {n}x{n}",
                    c.dim()
                )));
            }
            let dev = c.hermitian_deviation();
            if dev > HERMITIAN_TOL {
                return Err(Error::NotHermitian(dev));
            }
        }
        Ok(NfoldPair {
            n,
            fold,
            hplus,
            hminus,
            pminus,
            pplus,
            cmats,
        })
    }

    /// Ordinary SUSY from a superpotential: `H± = -1/2 d² + (W² ± W')/2`,
    /// `P- = d + W`, `P+ = -d + W`, `C0 = 0`.
    pub fn ordinary_susy(w: ScalarField) -> NfoldPair {
        let potential = |sign: f64| {
            let w = w.clone();
            MatField::scalar(
                1,
                ScalarField::from_fn(
                    format!("V{}", if sign > 0.0 { '+' } else { '-' }),
                    move |q, k| {
                        let wj = w.eval(q, k)?;
                        Ok((&wj * &wj + sign * wj.derivative()?).scale(0.5))
                    },
                ),
            )
        };
        let wm = MatField::scalar(1, w.clone());
        let pminus = MatDiffOp::from_coeffs(vec![wm.clone(), MatField::identity(1)]).unwrap();
        let pplus = MatDiffOp::from_coeffs(vec![wm, MatField::scaled_identity(1, -1.0)]).unwrap();
        NfoldPair::new(
            MatDiffOp::schrodinger(potential(1.0)),
            MatDiffOp::schrodinger(potential(-1.0)),
            pminus,
            pplus,
            vec![CMat::zeros(1)],
        )
        .expect("consistent shapes")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `N`.
    pub fn fold(&self) -> usize {
        self.fold
    }

    /// Jet order that covers the superalgebra right side.
    pub fn default_order(&self) -> usize {
        2 * self.fold + 4
    }

    /// Pointwise shape checks: leading coefficients `-1/2 I`, `I`,
    /// `(-1)^N I` and no first-order term in `H±`.
    pub fn check_shape(&self, samples: &[f64], tol: f64) -> Result<()> {
        let id = CMat::identity(self.n);
        let half = id.scale(Complex64::new(-0.5, 0.0));
        let sign = if self.fold.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        for &q in samples {
            for (name, h) in [("H+", &self.hplus), ("H-", &self.hminus)] {
                let c = h.coefficient_values(q, 2)?;
                if (&c[2] - &half).max_abs() > tol || c[1].max_abs() > tol {
                    return Err(Error::Shape(format!(
                        "{name} is not of the form -1/2 d² + V at q = {q}"
                    )));
                }
            }
            let lead = |p: &MatDiffOp| -> Result<CMat> {
                Ok(p.coefficient_values(q, 2)?.swap_remove(self.fold))
            };
            if (&lead(&self.pminus)? - &id).max_abs() > tol {
                return Err(Error::Shape(format!(
                    "P- leading coefficient is not I at q = {q}"
                )));
            }
            if (&lead(&self.pplus)? - &id.scale(Complex64::new(sign, 0.0))).max_abs() > tol {
                return Err(Error::Shape(format!(
                    "P+ leading coefficient is not (-1)^N I at q = {q}"
                )));
            }
        }
        Ok(())
    }

    fn side(&self, side: Side) -> (&MatDiffOp, &MatDiffOp, &MatDiffOp, &MatDiffOp) {
        // (left P, right P, H the left P acts after, H in front)
        match side {
            Side::Minus => (&self.pminus, &self.pplus, &self.hminus, &self.hplus),
            Side::Plus => (&self.pplus, &self.pminus, &self.hplus, &self.hminus),
        }
    }

    /// `2^N [ (H + C0)^N + sum_k C_k (H + C0)^{N-k-1} ]`.
    pub fn superalgebra_rhs(&self, h: &MatDiffOp) -> Result<MatDiffOp> {
        let shifted = h.plus(&MatDiffOp::constant(self.cmats[0].clone()))?;
        let mut rhs = shifted.power(self.fold)?;
        for k in 1..self.fold {
            let term = MatDiffOp::constant(self.cmats[k].clone())
                .compose(&shifted.power(self.fold - k - 1)?)?;
            rhs = rhs.plus(&term)?;
        }
        Ok(rhs.scaled(Complex64::new(2f64.powi(self.fold as i32), 0.0)))
    }
}

impl From<&SusySystem> for NfoldPair {
    fn from(sys: &SusySystem) -> Self {
        NfoldPair::new(
            sys.hplus.clone(),
            sys.hminus.clone(),
            sys.p2minus.clone(),
            sys.p2plus.clone(),
            vec![sys.c0().to_cmat(), sys.c1().to_cmat()],
        )
        .expect("2x2 second-order system")
    }
}

/// `P H - H' P` for the chosen side.
pub fn intertwining_residual(
    pair: &NfoldPair,
    side: Side,
    samples: &[f64],
    order: usize,
) -> Result<Residual> {
    let (p, _, h_right, h_left) = pair.side(side);
    residual_between(&p.compose(h_right)?, &h_left.compose(p)?, samples, order)
}

/// `P P' - 2^N[...]` for the chosen side.
pub fn superalgebra_residual(
    pair: &NfoldPair,
    side: Side,
    samples: &[f64],
    order: usize,
) -> Result<Residual> {
    let (p, q, _, h_left) = pair.side(side);
    residual_between(
        &p.compose(q)?,
        &pair.superalgebra_rhs(h_left)?,
        samples,
        order,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingResult {
    /// `|<phi, P- psi> - <P+ phi, psi>|`.
    pub mismatch: f64,
    pub lhs: [f64; 2],
    pub rhs: [f64; 2],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Relative endpoint magnitude above which boundary terms are not negligible.
pub const ENDPOINT_TOL: f64 = 1e-12;

fn simpson_weights(count: usize, h: f64) -> Vec<f64> {
    (0..count)
        .map(|i| {
            let w = if i == 0 || i + 1 == count {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Compares `<phi, P- psi>` with `<P+ phi, psi>` by composite Simpson
/// quadrature on `points` equally spaced nodes (rounded up to odd).
pub fn adjoint_pairing_check(
    pm: &MatDiffOp,
    pp: &MatDiffOp,
    phi: &VectorFieldFn,
    psi: &VectorFieldFn,
    domain: Domain,
    points: usize,
) -> Result<PairingResult> {
    let count = (points.max(3)) | 1;
    let nodes = domain.uniform(count);
    let weights = simpson_weights(count, domain.length() / (count - 1) as f64);
    let k = pm.order().max(pp.order());

    let spacing = domain.length() / (count - 1) as f64;
    let integrands = |q: f64| -> Result<[Complex64; 3]> {
        let phi_v = phi.values(q)?;
        let psi_v = psi.values(q)?;
        let pm_psi: Vec<Complex64> = pm.apply(psi, q, k)?.iter().map(|j| j.value()).collect();
        let pp_phi: Vec<Complex64> = pp.apply(phi, q, k)?.iter().map(|j| j.value()).collect();
        let mag = phi_v
            .iter()
            .chain(&psi_v)
            .fold(0.0f64, |m, z| m.max(z.norm()));
        let out = [
            inner(&phi_v, &pm_psi),
            inner(&pp_phi, &psi_v),
            Complex64::new(mag, 0.0),
        ];
        if out.iter().all(|z| z.is_finite()) {
            Ok(out)
        } else {
            Err(Error::singular(q, "pairing integrand"))
        }
    };
    // symmetric limit across a removable singularity of the coefficients
    let sample = |q: f64| -> Result<[Complex64; 3]> {
        integrands(q).or_else(|err| {
            let delta = 1e-3 * spacing;
            let (l, r) = (integrands(q - delta)?, integrands(q + delta)?);
            let close = (0..2).all(|i| (l[i] - r[i]).norm() <= 1e-3 * (1.0 + l[i].norm()));
            if close {
                Ok(std::array::from_fn(|i| (l[i] + r[i]) * 0.5))
            } else {
                Err(err)
            }
        })
    };

    let mut lhs = ZERO;
    let mut rhs = ZERO;
    let (mut peak, mut edge) = (0.0f64, 0.0f64);
    for (i, (&q, &w)) in nodes.iter().zip(&weights).enumerate() {
        let [l, r, mag] = sample(q)?;
        lhs += l * w;
        rhs += r * w;
        peak = peak.max(mag.re);
        if i == 0 || i + 1 == count {
            edge = edge.max(mag.re);
        }
    }
    let mut warnings = Vec::new();
    if edge > ENDPOINT_TOL * peak {
        warnings.push(format!(
            "test functions do not vanish at the endpoints (relative magnitude {:.3e}); boundary terms are not negligible",
            edge / peak
        ));
    }
    Ok(PairingResult {
        mismatch: (lhs - rhs).norm(),
        lhs: [lhs.re, lhs.im],
        rhs: [rhs.re, rhs.im],
        warnings,
    })
}

/// `exp(-1/(1 - t²))` with `t` mapping `[a, b]` onto `[-1, 1]`, zero outside.
pub fn bump(domain: Domain) -> ScalarField {
    let (mid, half) = (domain.midpoint(), 0.5 * domain.length());
    ScalarField::from_fn(format!("bump[{}, {}]", domain.a, domain.b), move |q, k| {
        let t = Jet::variable(q, k).add_scalar(-mid).scale(1.0 / half);
        let gap = (&t * &t).scale(-1.0).add_scalar(1.0);
        if gap.value() <= 0.0 || -1.0 / gap.value() < -700.0 {
            return Ok(Jet::zero(q, k));
        }
        gap.recip()?.scale(-1.0).apply(Elementary::Exp)
    })
}

/// `e^{i theta} P` and `e^{-i theta} P+`: the superalgebra is unchanged.
pub fn with_phase(pair: &NfoldPair, theta: f64) -> NfoldPair {
    let z = Complex64::from_polar(1.0, theta);
    let mut out = pair.clone();
    out.pminus = pair.pminus.scaled(z);
    out.pplus = pair.pplus.scaled(z.conj());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffops::residual_sup;
    use crate::linalg::ONE;
    use crate::susy2::{build_nondegenerate, NonDegenSpec};

    fn harmonic() -> SusySystem {
        build_nondegenerate(&NonDegenSpec {
            w10: "-2*q".parse().unwrap(),
            v1: "0".parse().unwrap(),
            c00: 0.0,
            c0vec: [0.0; 3],
            c10: -0.25,
            ctilde: 0.0,
            domain: Domain::new(-4.0, 4.0).unwrap(),
            samples: 41,
        })
        .unwrap()
    }

    fn regular() -> SusySystem {
        build_nondegenerate(&NonDegenSpec {
            w10: "2 + tanh(q)".parse().unwrap(),
            v1: "0.3*sin(q)".parse().unwrap(),
            c00: 0.2,
            c0vec: [0.5, -0.2, 0.8],
            c10: 0.7,
            ctilde: -0.4,
            domain: Domain::new(-8.0, 8.0).unwrap(),
            samples: 81,
        })
        .unwrap()
    }

    #[test]
    fn harmonic_pair_is_two_fold_supersymmetric() {
        let sys = harmonic();
        let pair = NfoldPair::from(&sys);
        assert_eq!((pair.dim(), pair.fold()), (2, 2));
        pair.check_shape(&sys.samples, 1e-12).unwrap();
        let k = pair.default_order();
        for side in [Side::Minus, Side::Plus] {
            assert!(
                intertwining_residual(&pair, side, &sys.samples, k)
                    .unwrap()
                    .raw
                    <= 1e-9
            );
            assert!(
                superalgebra_residual(&pair, side, &sys.samples, k)
                    .unwrap()
                    .raw
                    <= 1e-9
            );
        }
    }

    #[test]
    fn harmonic_rhs_is_four_h_squared_minus_quarter() {
        let sys = harmonic();
        let pair = NfoldPair::from(&sys);
        let rhs = pair.superalgebra_rhs(&pair.hplus).unwrap();
        let quarter = MatDiffOp::constant(CMat::identity(2).scale(Complex64::new(-0.25, 0.0)));
        let expect = pair
            .hplus
            .compose(&pair.hplus)
            .unwrap()
            .plus(&quarter)
            .unwrap()
            .scaled(Complex64::new(4.0, 0.0));
        assert!(
            residual_between(&rhs, &expect, &sys.samples, 8)
                .unwrap()
                .raw
                <= 1e-12
        );
    }

    #[test]
    fn ordinary_susy_is_the_one_fold_case() {
        let pair = NfoldPair::ordinary_susy(ScalarField::parse("q").unwrap());
        let s = Domain::new(-3.0, 3.0).unwrap().uniform(31);
        pair.check_shape(&s, 0.0).unwrap();
        for side in [Side::Minus, Side::Plus] {
            assert!(intertwining_residual(&pair, side, &s, 6).unwrap().raw <= 1e-12);
            assert!(superalgebra_residual(&pair, side, &s, 6).unwrap().raw <= 1e-12);
        }
        let pair = NfoldPair::ordinary_susy(ScalarField::parse("tanh(q) + 0.3*q^3").unwrap());
        for side in [Side::Minus, Side::Plus] {
            assert!(intertwining_residual(&pair, side, &s, 6).unwrap().relative <= 1e-12);
            assert!(superalgebra_residual(&pair, side, &s, 6).unwrap().relative <= 1e-12);
        }
    }

    #[test]
    fn flipped_potential_breaks_intertwining() {
        let good = NfoldPair::ordinary_susy(ScalarField::parse("q").unwrap());
        let flipped = MatDiffOp::schrodinger(MatField::scalar(
            1,
            ScalarField::parse("-(q^2 + 1)/2").unwrap(),
        ));
        let bad = NfoldPair::new(
            flipped,
            good.hminus.clone(),
            good.pminus.clone(),
            good.pplus.clone(),
            good.cmats.clone(),
        )
        .unwrap();
        let s = [-1.0, 0.0, 1.0];
        assert!(intertwining_residual(&bad, Side::Minus, &s, 6).unwrap().raw > 0.5);
    }

    #[test]
    fn wrong_c1_shifts_rhs_by_four_delta() {
        let sys = harmonic();
        let mut pair = NfoldPair::from(&sys);
        pair.cmats[1] = &pair.cmats[1] + &CMat::identity(2).scale(Complex64::new(0.1, 0.0));
        let r = superalgebra_residual(&pair, Side::Minus, &sys.samples, 8).unwrap();
        assert!((r.raw - 0.4 * 2f64.sqrt()).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn phase_invariance() {
        let sys = regular();
        let pair = NfoldPair::from(&sys);
        let s: Vec<f64> = sys.samples.iter().step_by(8).copied().collect();
        let rotated = with_phase(&pair, 0.7);
        for side in [Side::Minus, Side::Plus] {
            let a = superalgebra_residual(&pair, side, &s, 8).unwrap();
            let b = superalgebra_residual(&rotated, side, &s, 8).unwrap();
            assert!(a.relative <= 1e-9 && b.relative <= 1e-9);
            let la = pair.pminus.compose(&pair.pplus).unwrap();
            let lb = rotated.pminus.compose(&rotated.pplus).unwrap();
            assert!(residual_between(&la, &lb, &s, 8).unwrap().relative <= 1e-14);
        }
    }

    #[test]
    fn shape_validation() {
        let sys = harmonic();
        let pair = NfoldPair::from(&sys);
        assert!(NfoldPair::new(
            pair.hplus.clone(),
            pair.hminus.clone(),
            pair.pminus.clone(),
            pair.pplus.clone(),
            vec![CMat::zeros(2)],
        )
        .is_err());
        let skew = CMat::from_real(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        assert!(matches!(
            NfoldPair::new(
                pair.hplus.clone(),
                pair.hminus.clone(),
                pair.pminus.clone(),
                pair.pplus.clone(),
                vec![CMat::zeros(2), skew],
            ),
            Err(Error::NotHermitian(_))
        ));
        // P+ = P- has the wrong leading sign only for odd N; here it breaks the adjoint relation
        let wrong = NfoldPair::new(
            pair.hplus.clone(),
            pair.hminus.clone(),
            pair.pminus.clone(),
            pair.pminus.scaled(-ONE),
            pair.cmats.clone(),
        )
        .unwrap();
        assert!(wrong.check_shape(&[1.0], 1e-12).is_err());
    }

    #[test]
    fn pairing_on_gaussian_bumps() {
        let sys = regular();
        let phi = VectorFieldFn::parse_real(&["exp(-(q - 0.5)^2)", "q*exp(-q^2/2)"]).unwrap();
        let psi = VectorFieldFn::parse_real(&["exp(-2*(q + 0.3)^2)", "cos(q)*exp(-q^2)"]).unwrap();
        let r = adjoint_pairing_check(
            &sys.p2minus,
            &sys.p2plus,
            &phi,
            &psi,
            Domain::new(-8.0, 8.0).unwrap(),
            2001,
        )
        .unwrap();
        assert!(r.mismatch <= 1e-6, "{r:?}");
        assert!(r.warnings.is_empty());
        assert!(r.lhs[0].abs() > 1e-3);
    }

    #[test]
    fn pairing_first_order_and_compact_bump() {
        let d = MatDiffOp::derivative(1, 1);
        let dom = Domain::new(-1.0, 1.0).unwrap();
        let b = bump(dom);
        let phi = VectorFieldFn::new(vec![crate::fields::ComplexField::real(b.clone())]);
        let shifted = Domain::new(-0.8, 1.0).unwrap();
        let psi = VectorFieldFn::new(vec![crate::fields::ComplexField::real(bump(shifted))]);
        let r = adjoint_pairing_check(&d, &d.scaled(-ONE), &phi, &psi, dom, 4001).unwrap();
        assert!(r.mismatch <= 1e-8, "{r:?}");
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn pairing_warns_on_non_decaying_functions() {
        let d = MatDiffOp::derivative(1, 1);
        let phi = VectorFieldFn::parse_real(&["exp(-q^2)"]).unwrap();
        let psi = VectorFieldFn::parse_real(&["1"]).unwrap();
        let r = adjoint_pairing_check(
            &d,
            &d.scaled(-ONE),
            &phi,
            &psi,
            Domain::new(-1.0, 1.0).unwrap(),
            101,
        )
        .unwrap();
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn formal_adjoint_matches_p2plus() {
        let sys = regular();
        // P2+ = d² - d w1 + w0 = d² - w1 d + (w0 - w1')
        let (w1, w0) = (sys.data.w1.clone(), sys.data.w0.clone());
        let explicit = MatDiffOp::from_coeffs(vec![
            MatField::from_fn(2, move |q, k| {
                Ok(&w0.to_matrix(q, k)? - &w1.to_matrix(q, k)?.nth_derivative(1)?)
            }),
            MatField::from_fn(2, {
                let w1 = sys.data.w1.clone();
                move |q, k| Ok(w1.to_matrix(q, k)?.scale(-ONE))
            }),
            MatField::identity(2),
        ])
        .unwrap();
        let diff = sys.p2minus.formal_adjoint().minus(&explicit).unwrap();
        assert!(residual_sup(&diff, &sys.samples, 6).unwrap() <= 1e-11);
    }
}
