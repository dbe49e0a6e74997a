//! 2x2 Hermitian 2-fold supersymmetric systems.
//!
//! Every system has the shape
//!
//! ```text
//! H± = -1/2 d² + V±(q),     P2- = d² + w1(q) d + w0(q),     P2+ = (P2-)^+
//! w1 = w10 s0 + v1 sum C0i si,      w0 = w00 s0 + v0 sum C0i si
//! ```
//!
//! with real scalar functions `w10, v1, w00, v0` and constant Hermitian
//! matrices `C0 = C00 s0 + sum C0i si`, `C1 = C10 s0 + Ct sum C0i si`.
//! In the non-degenerate branch `w10` and `v1` are free and `w00, v0` are
//! fixed pointwise by two first integrals; in the degenerate branch
//! `v1 = w10 / C` with `C = |C0vec|`, and `w10, w00` are free.

mod conditions;

pub use conditions::{
    check_all_conditions, check_first_integrals, check_intertwining_conditions,
    check_superalgebra_conditions, ConditionEntry, ConditionGroup, ConditionReport, CONDITION_IDS,
};

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diffops::{residual_between, MatDiffOp, Residual};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fields::{MatField, ScalarField};
use crate::grid::{sign_change_roots, Domain};
use crate::jets::{Jet, DEFAULT_ORDER};
use crate::pauli::{PauliConst, PauliField};

/// Relative threshold below which `w10² - C² v1²` (or `w10` in the
/// degenerate branch) counts as vanishing at a sample.
pub const DEGENERACY_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Nondegenerate,
    Degenerate,
}

#[derive(Debug, Clone)]
pub struct NonDegenSpec {
    pub w10: Expr,
    pub v1: Expr,
    pub c00: f64,
    pub c0vec: [f64; 3],
    pub c10: f64,
    pub ctilde: f64,
    pub domain: Domain,
    pub samples: usize,
}

impl NonDegenSpec {
    pub fn c_squared(&self) -> f64 {
        self.c0vec.iter().map(|c| c * c).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .c0vec
            .iter()
            .chain([&self.c00, &self.c10, &self.ctilde])
            .any(|c| !c.is_finite())
        {
            return Err(Error::InvalidSpec("constants must be finite".into()));
        }
        if self.c_squared() == 0.0 && self.ctilde != 0.0 {
            return Err(Error::InvalidSpec(
                "Ctilde must be 0 when C0vec is zero (C1i = Ctilde C0i has no direction)".into(),
            ));
        }
        if self.samples < 2 {
            return Err(Error::InvalidSpec("need at least 2 samples".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DegenSpec {
    pub w10: Expr,
    pub w00: Expr,
    pub c00: f64,
    pub c0vec: [f64; 3],
    pub ctilde: f64,
    pub domain: Domain,
    pub samples: usize,
}

impl DegenSpec {
    /// `C = |C0vec|`.
    pub fn c(&self) -> f64 {
        self.c0vec.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `C10 = Ct C`, not a free constant in this branch.
    pub fn c10(&self) -> f64 {
        self.ctilde * self.c()
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .c0vec
            .iter()
            .chain([&self.c00, &self.ctilde])
            .any(|c| !c.is_finite())
        {
            return Err(Error::InvalidSpec("constants must be finite".into()));
        }
        if self.c() == 0.0 {
            return Err(Error::InvalidSpec(
                "degenerate branch needs a nonzero C0vec (v1 = w10 / |C0vec|)".into(),
            ));
        }
        if self.samples < 2 {
            return Err(Error::InvalidSpec("need at least 2 samples".into()));
        }
        Ok(())
    }
}

/// Pauli components of the potentials and supercharge coefficients.
#[derive(Debug, Clone)]
pub struct PauliData {
    pub vplus: PauliField,
    pub vminus: PauliField,
    pub w1: PauliField,
    pub w0: PauliField,
    pub c0: PauliConst,
    pub c1: PauliConst,
}

/// A constructed system with the sample set it was validated on.
#[derive(Debug, Clone)]
pub struct SusySystem {
    pub hplus: MatDiffOp,
    pub hminus: MatDiffOp,
    pub p2minus: MatDiffOp,
    pub p2plus: MatDiffOp,
    pub data: PauliData,
    pub branch: Branch,
    /// Usable samples: the uniform grid minus points where the
    /// construction divides by (nearly) zero.
    pub samples: Vec<f64>,
    pub excluded: Vec<f64>,
    /// Zeros of the construction's denominator located between samples.
    pub singular_points: Vec<f64>,
    pub order: usize,
    /// Degenerate branch only: displayed formulas vs generic assembly.
    pub cross_check: Option<Residual>,
    pub provenance: BTreeMap<String, String>,
}

impl SusySystem {
    pub fn from_data(data: PauliData, branch: Branch) -> Self {
        let (hplus, hminus, p2minus, p2plus) = operators(&data);
        SusySystem {
            hplus,
            hminus,
            p2minus,
            p2plus,
            data,
            branch,
            samples: Vec::new(),
            excluded: Vec::new(),
            singular_points: Vec::new(),
            order: DEFAULT_ORDER,
            cross_check: None,
            provenance: BTreeMap::new(),
        }
    }

    pub fn c0(&self) -> PauliConst {
        self.data.c0
    }

    pub fn c1(&self) -> PauliConst {
        self.data.c1
    }

    /// Same system with one ingredient shifted; the potentials are left as
    /// constructed, so the conditions that involve the ingredient break.
    pub fn perturbed(&self, p: &Perturbation) -> SusySystem {
        let mut data = self.data.clone();
        let dir = data.c0.vector();
        match p {
            Perturbation::W00(f) => {
                data.w0.components[0] = data.w0.components[0].plus(f);
            }
            Perturbation::V0(f) => {
                for (i, c) in dir.iter().enumerate() {
                    let comp = &data.w0.components[i + 1];
                    data.w0.components[i + 1] = comp.plus(&f.scaled(*c));
                }
            }
            Perturbation::C10(d) => {
                let mut c = data.c1.components();
                c[0] += d;
                data.c1 = PauliConst::new(c);
            }
            Perturbation::Ctilde(d) => {
                let mut c = data.c1.components();
                for i in 0..3 {
                    c[i + 1] += d * dir[i];
                }
                data.c1 = PauliConst::new(c);
            }
            Perturbation::C00(d) => {
                let mut c = data.c0.components();
                c[0] += d;
                data.c0 = PauliConst::new(c);
            }
        }
        let mut out = SusySystem::from_data(data, self.branch);
        out.samples = self.samples.clone();
        out.excluded = self.excluded.clone();
        out.singular_points = self.singular_points.clone();
        out.order = self.order;
        out.provenance = self.provenance.clone();
        out.provenance.insert("perturbation".into(), p.describe());
        out
    }
}

/// A deliberate change to one ingredient of a constructed system.
#[derive(Debug, Clone)]
pub enum Perturbation {
    W00(ScalarField),
    V0(ScalarField),
    C10(f64),
    Ctilde(f64),
    C00(f64),
}

impl Perturbation {
    pub fn describe(&self) -> String {
        match self {
            Perturbation::W00(f) => format!("w00 += {}", f.label()),
            Perturbation::V0(f) => format!("v0 += {}", f.label()),
            Perturbation::C10(d) => format!("C10 += {d}"),
            Perturbation::Ctilde(d) => format!("Ctilde += {d}"),
            Perturbation::C00(d) => format!("C00 += {d}"),
        }
    }
}

fn operators(data: &PauliData) -> (MatDiffOp, MatDiffOp, MatDiffOp, MatDiffOp) {
    let hplus = MatDiffOp::schrodinger(data.vplus.to_mat_field());
    let hminus = MatDiffOp::schrodinger(data.vminus.to_mat_field());
    let p2minus = MatDiffOp::from_coeffs(vec![
        data.w0.to_mat_field(),
        data.w1.to_mat_field(),
        MatField::identity(2),
    ])
    .expect("2x2 coefficients");
    // P2+ = d² - w1 d + (w0 - w1')
    let w1 = &data.w1.components;
    let w0 = &data.w0.components;
    let shifted = PauliField::new(std::array::from_fn(|mu| {
        w0[mu].plus(&w1[mu].derivative().scaled(-1.0))
    }));
    let negated = PauliField::new(std::array::from_fn(|mu| w1[mu].scaled(-1.0)));
    let p2plus = MatDiffOp::from_coeffs(vec![
        shifted.to_mat_field(),
        negated.to_mat_field(),
        MatField::identity(2),
    ])
    .expect("2x2 coefficients");
    (hplus, hminus, p2minus, p2plus)
}

/// `(W, W', W'')` and `(v, v', v'')` from value jets.
fn with_derivs(j: &Jet) -> Result<(Jet, Jet, Jet)> {
    let d1 = j.derivative()?;
    let d2 = d1.derivative()?;
    Ok((j.clone(), d1, d2))
}

fn degenerate_at(w: f64, cv: f64) -> bool {
    let g = w * w - cv * cv;
    !(g.abs() > DEGENERACY_RTOL * (w * w + cv * cv))
}

/// `w00` and `v0` from `w10`, `v1` jets at one point.
fn nondegenerate_scalars(w: &Jet, v: &Jet, c2: f64, c10: f64, ct: f64) -> Result<(Jet, Jet)> {
    let q = w.center();
    if degenerate_at(w.value(), c2.sqrt() * v.value()) {
        return Err(Error::Degenerate { points: vec![q] });
    }
    let (w, wp, wpp) = with_derivs(w)?;
    let (v, vp, vpp) = with_derivs(v)?;
    let w2 = &w * &w;
    let w3 = &w2 * &w;
    let w4 = &w2 * &w2;
    let wp2 = &wp * &wp;
    let v2 = &v * &v;
    let vp2 = &vp * &vp;

    let num_w00 = &w2
        * (-2.0 * (&w * &wpp) + &wp2 + 2.0 * (&w2 * &wp) + &w4).add_scalar(16.0 * c10)
        + c2 * (2.0 * (&w * &wpp * &v2) + &wp2 * &v2 - 4.0 * (&w * &wp * &v * &vp)
            + 2.0 * (&w2 * &v * &vpp)
            + &w2 * &vp2
            - 4.0 * (&w2 * &wp * &v2)
            - &w4 * &v2
            - (32.0 * ct) * (&w * &v)
            + (16.0 * c10) * &v2)
        - (c2 * c2) * (&v2 * (2.0 * (&v * &vpp) - &vp2 - 2.0 * (&wp * &v2) + &w2 * &v2))
        + (c2 * c2 * c2) * (&v2 * &v2 * &v2);

    let num_v0 = &w
        * (&w * &wpp * &v - &wp2 * &v + &w * &wp * &vp - &w2 * &vpp
            + &w3 * &vp
            + &w4 * &v
            + (8.0 * ct) * &w
            - (16.0 * c10) * &v)
        + c2 * (&v
            * (-(&wpp * &v2) + &wp * &v * &vp + &w * &v * &vpp
                - &w * &vp2
                - 2.0 * (&w2 * &v * &vp)
                - 2.0 * (&w3 * &v2)
                + (8.0 * ct) * &v))
        + (c2 * c2) * (&v2 * &v2 * (&vp + &w * &v));

    let g = &w2 - c2 * &v2;
    let den = &g * &g;
    let w00 = num_w00
        .checked_div(&den.scale(4.0))
        .map_err(|_| Error::Degenerate { points: vec![q] })?;
    let v0 = num_v0
        .checked_div(&den.scale(2.0))
        .map_err(|_| Error::Degenerate { points: vec![q] })?;
    Ok((w00, v0))
}

/// `w00(q0)` and `v0(q0)` as jets of order `order - 2`.
pub fn solve_w00_v0(spec: &NonDegenSpec, q0: f64, order: usize) -> Result<(Jet, Jet)> {
    let w = spec.w10.eval_jet(q0, order)?;
    let v = spec.v1.eval_jet(q0, order)?;
    nondegenerate_scalars(&w, &v, spec.c_squared(), spec.c10, spec.ctilde)
}

/// Closure data shared by the fields of one construction.
type PartsFn = Arc<dyn Fn(f64, usize) -> Result<[Jet; 4]> + Send + Sync>;

fn part_field(
    label: String,
    parts: &PartsFn,
    f: impl Fn(&[Jet; 4]) -> Result<Jet> + Send + Sync + 'static,
) -> ScalarField {
    let parts = parts.clone();
    ScalarField::from_fn(label, move |q, k| f(&parts(q, k)?))
}

/// Pauli data from `[w10, v1, w00, v0]` via the generic formulas.
fn assemble_generic(parts: PartsFn, c00: f64, c0vec: [f64; 3], c1: PauliConst) -> PauliData {
    let c2: f64 = c0vec.iter().map(|c| c * c).sum();
    let pick = |i: usize, name: &str| part_field(name.into(), &parts, move |p| Ok(p[i].clone()));
    let v_scalar = move |p: &[Jet; 4], a: f64| -> Result<Jet> {
        let [w, v, w00, _] = p;
        let wp = w.derivative()?;
        Ok(((a * &wp - 2.0 * w00 + w * w + c2 * (v * v)).scale(0.25)).add_scalar(-c00))
    };
    let v_vector = |p: &[Jet; 4], a: f64| -> Result<Jet> {
        let [w, v, _, v0] = p;
        let vp = v.derivative()?;
        Ok((a * &vp - 2.0 * v0 + 2.0 * (w * v))
            .scale(0.25)
            .add_scalar(-1.0))
    };
    let vplus = PauliField::aligned(
        part_field("V0+".into(), &parts, move |p| v_scalar(p, 3.0)),
        part_field("V+ vector".into(), &parts, move |p| v_vector(p, 3.0)),
        c0vec,
    );
    let vminus = PauliField::aligned(
        part_field("V0-".into(), &parts, move |p| v_scalar(p, -1.0)),
        part_field("V- vector".into(), &parts, move |p| v_vector(p, -1.0)),
        c0vec,
    );
    let w1 = PauliField::aligned(pick(0, "w10"), pick(1, "v1"), c0vec);
    let w0 = PauliField::aligned(pick(2, "w00"), pick(3, "v0"), c0vec);
    PauliData {
        vplus,
        vminus,
        w1,
        w0,
        c0: PauliConst::from_parts(c00, c0vec),
        c1,
    }
}

fn screen(
    samples: Vec<f64>,
    offending: impl Fn(f64) -> Result<bool>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut keep = Vec::with_capacity(samples.len());
    let mut drop = Vec::new();
    for q in samples {
        if offending(q)? {
            drop.push(q);
        } else {
            keep.push(q);
        }
    }
    if keep.is_empty() {
        return Err(Error::Degenerate { points: drop });
    }
    Ok((keep, drop))
}

fn scalar(e: &Expr) -> ScalarField {
    ScalarField::from_expr(e.clone())
}

/// Non-degenerate system from free `w10`, `v1`.
pub fn build_nondegenerate(spec: &NonDegenSpec) -> Result<SusySystem> {
    spec.validate()?;
    let c2 = spec.c_squared();
    let (c10, ct) = (spec.c10, spec.ctilde);
    let (wf, vf) = (scalar(&spec.w10), scalar(&spec.v1));

    let gap = |q: f64| -> Result<(f64, f64)> { Ok((wf.value(q)?, c2.sqrt() * vf.value(q)?)) };
    let grid = spec.domain.uniform(spec.samples);
    let singular_points = sign_change_roots(&grid, |q| gap(q).ok().map(|(w, cv)| w * w - cv * cv));
    let (samples, excluded) = screen(grid, |q| {
        let (w, cv) = gap(q)?;
        Ok(degenerate_at(w, cv))
    })?;

    let parts: PartsFn = {
        let (wf, vf) = (wf.clone(), vf.clone());
        Arc::new(move |q, k| {
            let w = wf.eval(q, k)?;
            let v = vf.eval(q, k)?;
            let (w00, v0) = nondegenerate_scalars(&w, &v, c2, c10, ct)?;
            Ok([w, v, w00, v0])
        })
    };
    let c1 = PauliConst::from_parts(c10, spec.c0vec.map(|c| ct * c));
    let data = assemble_generic(parts, spec.c00, spec.c0vec, c1);
    let mut sys = SusySystem::from_data(data, Branch::Nondegenerate);
    sys.samples = samples;
    sys.excluded = excluded;
    sys.singular_points = singular_points;
    sys.provenance = BTreeMap::from([
        ("branch".into(), "nondegenerate".into()),
        ("w10".into(), spec.w10.to_string()),
        ("v1".into(), spec.v1.to_string()),
        ("C00".into(), spec.c00.to_string()),
        ("C0vec".into(), format!("{:?}", spec.c0vec)),
        ("C10".into(), c10.to_string()),
        ("Ctilde".into(), ct.to_string()),
    ]);
    Ok(sys)
}

/// `v1 = w10 / C` and `v0` from the single first integral of the
/// degenerate branch.
pub fn degenerate_closure(spec: &DegenSpec, q0: f64, order: usize) -> Result<(Jet, Jet)> {
    let w = spec.w10.eval_jet(q0, order)?;
    let w00 = spec.w00.eval_jet(q0, order)?;
    closure_from_jets(&w, &w00, spec.c(), spec.c10())
}

fn closure_from_jets(w: &Jet, w00: &Jet, c: f64, c10: f64) -> Result<(Jet, Jet)> {
    let q = w.center();
    if w.value() == 0.0 || c == 0.0 {
        return Err(Error::singular(q, "w10 vanishes"));
    }
    let (w, wp, wpp) = with_derivs(w)?;
    let w2 = &w * &w;
    let num = (-2.0 * (&w * &wpp) + &wp * &wp + 4.0 * (&w2 * &wp) + 4.0 * (&w2 * &w2))
        .add_scalar(8.0 * c10);
    let v0 = (num.checked_div(&w2.scale(4.0))? - w00).scale(1.0 / c);
    Ok((w.scale(1.0 / c), v0))
}

/// Degenerate-branch Pauli data straight from the displayed system.
fn degenerate_direct(
    wf: ScalarField,
    w00f: ScalarField,
    c00: f64,
    c0vec: [f64; 3],
    ct: f64,
) -> PauliData {
    let c: f64 = c0vec.iter().map(|x| x * x).sum::<f64>().sqrt();
    let parts: PartsFn = Arc::new(move |q, k| {
        let w = wf.eval(q, k)?;
        if w.value() == 0.0 {
            return Err(Error::singular(q, "w10 vanishes"));
        }
        let w00 = w00f.eval(q, k)?;
        // [w, w', w'', w00]
        let wp = w.derivative()?;
        let wpp = wp.derivative()?;
        Ok([w, wp, wpp, w00])
    });
    // w''/w - w'^2/(2 w^2) - 4 Ct C / w^2
    let shared = move |p: &[Jet; 4]| -> Result<Jet> {
        let [w, wp, wpp, _] = p;
        let w2 = w * w;
        Ok(wpp.checked_div(w)?
            - (wp * wp).checked_div(&w2.scale(2.0))?
            - Jet::constant(4.0 * ct * c, w.center(), w.order()).checked_div(&w2)?)
    };
    let v_scalar = move |p: &[Jet; 4], a: f64| -> Result<Jet> {
        let [w, wp, _, w00] = p;
        Ok((a * wp - 2.0 * w00 + 2.0 * (w * w))
            .scale(0.25)
            .add_scalar(-c00))
    };
    let v_vector = move |p: &[Jet; 4], a: f64| -> Result<Jet> {
        let [_, wp, _, w00] = p;
        Ok((a * wp + 2.0 * w00 + shared(p)?)
            .scale(0.25 / c)
            .add_scalar(-1.0))
    };
    let vplus = PauliField::aligned(
        part_field("V0+".into(), &parts, move |p| v_scalar(p, 3.0)),
        part_field("V+ vector".into(), &parts, move |p| v_vector(p, 1.0)),
        c0vec,
    );
    let vminus = PauliField::aligned(
        part_field("V0-".into(), &parts, move |p| v_scalar(p, -1.0)),
        part_field("V- vector".into(), &parts, move |p| v_vector(p, -3.0)),
        c0vec,
    );
    let w1 = PauliField::aligned(
        part_field("w10".into(), &parts, |p| Ok(p[0].clone())),
        part_field("w10/C".into(), &parts, move |p| Ok(p[0].scale(1.0 / c))),
        c0vec,
    );
    let w0_vector = move |p: &[Jet; 4]| -> Result<Jet> {
        let [w, wp, wpp, w00] = p;
        let w2 = w * w;
        let inner = wp - w00 + &w2 - wpp.checked_div(&w.scale(2.0))?
            + (wp * wp).checked_div(&w2.scale(4.0))?
            + Jet::constant(2.0 * ct * c, w.center(), w.order()).checked_div(&w2)?;
        Ok(inner.scale(1.0 / c))
    };
    let w0 = PauliField::aligned(
        part_field("w00".into(), &parts, |p| Ok(p[3].clone())),
        part_field("v0".into(), &parts, w0_vector),
        c0vec,
    );
    PauliData {
        vplus,
        vminus,
        w1,
        w0,
        c0: PauliConst::from_parts(c00, c0vec),
        c1: PauliConst::from_parts(ct * c, c0vec.map(|x| ct * x)),
    }
}

/// Degenerate system from free `w10`, `w00`.
pub fn build_degenerate(spec: &DegenSpec) -> Result<SusySystem> {
    spec.validate()?;
    let (wf, w00f) = (scalar(&spec.w10), scalar(&spec.w00));
    let grid = spec.domain.uniform(spec.samples);
    let values: Vec<f64> = grid.iter().map(|&q| wf.value(q)).collect::<Result<_>>()?;
    let scale = values.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let singular_points = sign_change_roots(&grid, |q| wf.value(q).ok());
    let (samples, excluded) = screen(grid, |q| {
        let w = wf.value(q)?;
        Ok(!(w.abs() > DEGENERACY_RTOL * scale))
    })?;

    let data = degenerate_direct(wf.clone(), w00f.clone(), spec.c00, spec.c0vec, spec.ctilde);
    let mut sys = SusySystem::from_data(data, Branch::Degenerate);

    let (c, c10) = (spec.c(), spec.c10());
    let parts: PartsFn = Arc::new(move |q, k| {
        let w = wf.eval(q, k)?;
        let w00 = w00f.eval(q, k)?;
        let (v1, v0) = closure_from_jets(&w, &w00, c, c10)?;
        Ok([w, v1, w00, v0])
    });
    let generic = SusySystem::from_data(
        assemble_generic(parts, spec.c00, spec.c0vec, sys.data.c1),
        Branch::Degenerate,
    );
    let mut worst = Residual::zero();
    for (a, b) in [
        (&sys.hplus, &generic.hplus),
        (&sys.hminus, &generic.hminus),
        (&sys.p2minus, &generic.p2minus),
    ] {
        let r = residual_between(a, b, &samples, sys.order)?;
        if r.relative > worst.relative || worst.worst_q.is_nan() {
            worst = Residual {
                raw: worst.raw.max(r.raw),
                ..r
            };
        } else {
            worst.raw = worst.raw.max(r.raw);
        }
    }
    sys.cross_check = Some(worst);
    sys.samples = samples;
    sys.excluded = excluded;
    sys.singular_points = singular_points;
    sys.provenance = BTreeMap::from([
        ("branch".into(), "degenerate".into()),
        ("w10".into(), spec.w10.to_string()),
        ("w00".into(), spec.w00.to_string()),
        ("C00".into(), spec.c00.to_string()),
        ("C0vec".into(), format!("{:?}", spec.c0vec)),
        ("Ctilde".into(), spec.ctilde.to_string()),
        ("C10".into(), c10.to_string()),
    ]);
    Ok(sys)
}

/// The same `w10` with `C0vec = 0`, `Ct = 0`: the scalar 2-fold pair
/// times the identity.
pub fn scalar_limit(spec: &NonDegenSpec) -> Result<SusySystem> {
    let mut s = spec.clone();
    s.c0vec = [0.0; 3];
    s.ctilde = 0.0;
    s.v1 = Expr::Num(0.0);
    build_nondegenerate(&s)
}
