//! Componentwise conditions on the Pauli data of a 2x2 system.
//!
//! Intertwining `P2- H- = H+ P2-` is equivalent to co1..co7, the
//! superalgebra `P2-+ P2+- = 4[(H± + C0)² + C1]` to c+1..c+6 and c-1..c-6,
//! and the two first integrals d1, d2 fix the integration constants
//! `16 C10` and `8 Ct`. Vector-valued equations are expanded over
//! `i = 1, 2, 3` (or `mu = 0..3`) and reported under one id.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SusySystem;
use crate::error::{Error, Result};
use crate::pauli::{levi_civita, PauliField};

pub const CONDITION_IDS: [&str; 21] = [
    "co1", "co2", "co3", "co4", "co5", "co6", "co7", "c+1", "c+2", "c+3", "c+4", "c+5", "c+6",
    "c-1", "c-2", "c-3", "c-4", "c-5", "c-6", "d1", "d2",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionGroup {
    Intertwining,
    Superalgebra,
    FirstIntegral,
}

impl ConditionGroup {
    fn of(id: &str) -> Self {
        if id.starts_with("co") {
            ConditionGroup::Intertwining
        } else if id.starts_with('d') {
            ConditionGroup::FirstIntegral
        } else {
            ConditionGroup::Superalgebra
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub id: String,
    pub group: ConditionGroup,
    /// Max over samples and components of |left - right|.
    pub max_abs: f64,
    /// Same, divided by `max(1, sum of |terms|)` per sample.
    pub max_rel: f64,
    pub worst_q: f64,
    pub pass: bool,
    /// First integrals only: max - min of the residual over samples.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub spread: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub tol: f64,
    pub samples: usize,
    pub entries: Vec<ConditionEntry>,
}

impl ConditionReport {
    pub fn get(&self, id: &str) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| !e.pass)
            .map(|e| e.id.as_str())
            .collect()
    }

    pub fn merge(mut self, other: ConditionReport) -> ConditionReport {
        self.entries.extend(other.entries);
        self
    }
}

/// Derivative values at one sample, indexed `[derivative][mu]`.
struct Point {
    w1: [[f64; 4]; 4],
    w0: [[f64; 4]; 3],
    vp: [[f64; 4]; 3],
    vm: [[f64; 4]; 3],
    c0: [f64; 4],
    c1: [f64; 4],
}

fn derivs<const D: usize>(f: &PauliField, q: f64, order: usize) -> Result<[[f64; 4]; D]> {
    let jets = f.eval(q, order)?;
    let mut out = [[0.0; 4]; D];
    for (mu, j) in jets.iter().enumerate() {
        for (d, row) in out.iter_mut().enumerate() {
            row[mu] = j.deriv(d).ok_or(Error::JetExhausted {
                required: order + d - j.order(),
            })?;
        }
    }
    Ok(out)
}

impl Point {
    fn at(sys: &SusySystem, q: f64) -> Result<Point> {
        let k = sys.order;
        let d = &sys.data;
        Ok(Point {
            w1: derivs(&d.w1, q, k)?,
            w0: derivs(&d.w0, q, k)?,
            vp: derivs(&d.vplus, q, k)?,
            vm: derivs(&d.vminus, q, k)?,
            c0: d.c0.components(),
            c1: d.c1.components(),
        })
    }

    /// `v1` and `v0` derivatives recovered by projecting on `C0vec`.
    fn projected(&self, rows: &[[f64; 4]], d: usize) -> f64 {
        let c2 = self.c2();
        if c2 == 0.0 {
            return 0.0;
        }
        (1..4).map(|i| self.c0[i] * rows[d][i]).sum::<f64>() / c2
    }

    fn c2(&self) -> f64 {
        (1..4).map(|i| self.c0[i] * self.c0[i]).sum()
    }

    fn ctilde(&self) -> f64 {
        let c2 = self.c2();
        if c2 == 0.0 {
            0.0
        } else {
            (1..4).map(|i| self.c0[i] * self.c1[i]).sum::<f64>() / c2
        }
    }
}

/// One scalar equation `sum of terms = 0`.
#[derive(Clone, Copy, Default)]
struct Eqn {
    sum: f64,
    mag: f64,
}

fn eqn(terms: impl IntoIterator<Item = f64>) -> Eqn {
    terms.into_iter().fold(Eqn::default(), |e, t| Eqn {
        sum: e.sum + t,
        mag: e.mag + t.abs(),
    })
}

const VEC: [usize; 3] = [1, 2, 3];

/// `sum_jk eps_ijk f(j, k)` as a term list.
fn cross(i: usize, f: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let mut out = Vec::new();
    for j in VEC {
        for k in VEC {
            let e = levi_civita(i, j, k);
            if e != 0.0 {
                out.push(e * f(j, k));
            }
        }
    }
    out
}

type Evaluator = fn(&Point) -> Vec<Eqn>;

fn co1(p: &Point) -> Vec<Eqn> {
    (0..4)
        .map(|m| eqn([p.vp[0][m], -p.vm[0][m], -p.w1[1][m]]))
        .collect()
}

fn co2(p: &Point) -> Vec<Eqn> {
    let mut t = vec![p.w1[2][0], 2.0 * p.w0[1][0], 4.0 * p.vm[1][0]];
    t.extend((0..4).map(|m| -2.0 * p.w1[0][m] * (p.vp[0][m] - p.vm[0][m])));
    vec![eqn(t)]
}

fn co3(p: &Point) -> Vec<Eqn> {
    VEC.map(|i| {
        eqn([
            p.w1[2][i],
            2.0 * p.w0[1][i],
            4.0 * p.vm[1][i],
            -2.0 * p.w1[0][i] * (p.vp[0][0] - p.vm[0][0]),
            -2.0 * p.w1[0][0] * (p.vp[0][i] - p.vm[0][i]),
        ])
    })
    .to_vec()
}

fn co4(p: &Point) -> Vec<Eqn> {
    VEC.map(|i| eqn(cross(i, |j, k| p.w1[0][j] * (p.vp[0][k] + p.vm[0][k]))))
        .to_vec()
}

fn co5(p: &Point) -> Vec<Eqn> {
    let mut t = vec![p.w0[2][0], 2.0 * p.vm[2][0]];
    for m in 0..4 {
        t.push(2.0 * p.w1[0][m] * p.vm[1][m]);
        t.push(-2.0 * p.w0[0][m] * (p.vp[0][m] - p.vm[0][m]));
    }
    vec![eqn(t)]
}

fn co6(p: &Point) -> Vec<Eqn> {
    VEC.map(|i| {
        eqn([
            p.w0[2][i],
            2.0 * p.vm[2][i],
            2.0 * p.w1[0][i] * p.vm[1][0],
            2.0 * p.w1[0][0] * p.vm[1][i],
            -2.0 * p.w0[0][i] * (p.vp[0][0] - p.vm[0][0]),
            -2.0 * p.w0[0][0] * (p.vp[0][i] - p.vm[0][i]),
        ])
    })
    .to_vec()
}

fn co7(p: &Point) -> Vec<Eqn> {
    VEC.map(|i| {
        eqn(cross(i, |j, k| {
            p.w1[0][j] * p.vm[1][k] + p.w0[0][j] * (p.vp[0][k] + p.vm[0][k])
        }))
    })
    .to_vec()
}

/// c±1: `4 V0 = a w10' - 2 w00 + sum w1m² - 4 C00`, `a = 3` or `-1`.
fn c1_scalar(p: &Point, v: &[[f64; 4]; 3], a: f64) -> Vec<Eqn> {
    let mut t = vec![
        4.0 * v[0][0],
        -a * p.w1[1][0],
        2.0 * p.w0[0][0],
        4.0 * p.c0[0],
    ];
    t.extend((0..4).map(|m| -p.w1[0][m] * p.w1[0][m]));
    vec![eqn(t)]
}

/// c±2: `4 Vi = a w1i' - 2 w0i + 2 w10 w1i - 4 C0i`.
fn c2_vector(p: &Point, v: &[[f64; 4]; 3], a: f64) -> Vec<Eqn> {
    VEC.map(|i| {
        eqn([
            4.0 * v[0][i],
            -a * p.w1[1][i],
            2.0 * p.w0[0][i],
            -2.0 * p.w1[0][0] * p.w1[0][i],
            4.0 * p.c0[i],
        ])
    })
    .to_vec()
}

fn cp1(p: &Point) -> Vec<Eqn> {
    c1_scalar(p, &p.vp, 3.0)
}

fn cp2(p: &Point) -> Vec<Eqn> {
    c2_vector(p, &p.vp, 3.0)
}

fn cp3(p: &Point) -> Vec<Eqn> {
    VEC.map(|i| eqn(cross(i, |j, k| p.w1[0][j] * (p.w1[1][k] - p.w0[0][k]))))
        .to_vec()
}

fn cp4(p: &Point) -> Vec<Eqn> {
    let mut t = vec![2.0 * p.vp[2][0], -4.0 * p.c1[0], -p.w1[3][0], p.w0[2][0]];
    for m in 0..4 {
        let s = p.vp[0][m] + p.c0[m];
        t.push(-4.0 * s * s);
        t.push(-p.w1[0][m] * p.w1[2][m]);
        t.push(-p.w1[1][m] * p.w0[0][m]);
        t.push(p.w1[0][m] * p.w0[1][m]);
        t.push(p.w0[0][m] * p.w0[0][m]);
    }
    vec![eqn(t)]
}

fn cp5(p: &Point) -> Vec<Eqn> {
    VEC.map(|i| {
        eqn([
            2.0 * p.vp[2][i],
            -8.0 * (p.vp[0][0] + p.c0[0]) * (p.vp[0][i] + p.c0[i]),
            -4.0 * p.c1[i],
            -p.w1[3][i],
            p.w0[2][i],
            -p.w1[2][0] * p.w1[0][i],
            -p.w1[0][0] * p.w1[2][i],
            p.w0[1][0] * p.w1[0][i],
            -p.w0[0][0] * p.w1[1][i],
            -p.w1[1][0] * p.w0[0][i],
            p.w1[0][0] * p.w0[1][i],
            2.0 * p.w0[0][0] * p.w0[0][i],
        ])
    })
    .to_vec()
}

fn cp6(p: &Point) -> Vec<Eqn> {
    VEC.map(|i| {
        eqn(cross(i, |j, k| {
            p.w1[2][j] * p.w1[0][k] + p.w1[1][j] * p.w0[0][k] + p.w1[0][j] * p.w0[1][k]
        }))
    })
    .to_vec()
}

fn cm1(p: &Point) -> Vec<Eqn> {
    c1_scalar(p, &p.vm, -1.0)
}

fn cm2(p: &Point) -> Vec<Eqn> {
    c2_vector(p, &p.vm, -1.0)
}

fn cm3(p: &Point) -> Vec<Eqn> {
    VEC.map(|i| eqn(cross(i, |j, k| p.w1[0][j] * p.w0[0][k])))
        .to_vec()
}

fn cm4(p: &Point) -> Vec<Eqn> {
    let mut t = vec![2.0 * p.vm[2][0], -4.0 * p.c1[0], p.w0[2][0]];
    for m in 0..4 {
        let s = p.vm[0][m] + p.c0[m];
        t.push(-4.0 * s * s);
        t.push(-p.w1[1][m] * p.w0[0][m]);
        t.push(-p.w1[0][m] * p.w0[1][m]);
        t.push(p.w0[0][m] * p.w0[0][m]);
    }
    vec![eqn(t)]
}

fn cm5(p: &Point) -> Vec<Eqn> {
    VEC.map(|i| {
        eqn([
            2.0 * p.vm[2][i],
            -8.0 * (p.vm[0][0] + p.c0[0]) * (p.vm[0][i] + p.c0[i]),
            -4.0 * p.c1[i],
            p.w0[2][i],
            -p.w0[1][0] * p.w1[0][i],
            -p.w0[0][0] * p.w1[1][i],
            -p.w1[1][0] * p.w0[0][i],
            -p.w1[0][0] * p.w0[1][i],
            2.0 * p.w0[0][0] * p.w0[0][i],
        ])
    })
    .to_vec()
}

fn cm6(p: &Point) -> Vec<Eqn> {
    VEC.map(|i| {
        eqn(cross(i, |j, k| {
            p.w1[1][j] * p.w0[0][k] + p.w1[0][j] * p.w0[1][k]
        }))
    })
    .to_vec()
}

fn d1(p: &Point) -> Vec<Eqn> {
    let (w, wp, wpp) = (p.w1[0][0], p.w1[1][0], p.w1[2][0]);
    let w00 = p.w0[0][0];
    let (v, vp, vpp) = (
        p.projected(&p.w1, 0),
        p.projected(&p.w1, 1),
        p.projected(&p.w1, 2),
    );
    let v0 = p.projected(&p.w0, 0);
    let c2 = p.c2();
    vec![eqn([
        2.0 * w * wpp,
        -wp * wp,
        -2.0 * w * w * wp,
        4.0 * w * w * w00,
        -w.powi(4),
        c2 * 2.0 * v * vpp,
        -c2 * vp * vp,
        -c2 * 2.0 * wp * v * v,
        -c2 * 4.0 * w * v * vp,
        c2 * 8.0 * w * v * v0,
        c2 * 4.0 * w00 * v * v,
        -c2 * 6.0 * w * w * v * v,
        -c2 * c2 * v.powi(4),
        -16.0 * p.c1[0],
    ])]
}

fn d2(p: &Point) -> Vec<Eqn> {
    let (w, wp, wpp) = (p.w1[0][0], p.w1[1][0], p.w1[2][0]);
    let w00 = p.w0[0][0];
    let (v, vp, vpp) = (
        p.projected(&p.w1, 0),
        p.projected(&p.w1, 1),
        p.projected(&p.w1, 2),
    );
    let v0 = p.projected(&p.w0, 0);
    let c2 = p.c2();
    vec![eqn([
        wpp * v,
        -wp * vp,
        w * vpp,
        -2.0 * w * wp * v,
        -w * w * vp,
        2.0 * w * w * v0,
        4.0 * w * w00 * v,
        -2.0 * w.powi(3) * v,
        -c2 * v * v * vp,
        c2 * v * v * 2.0 * v0,
        -c2 * v * v * 2.0 * w * v,
        -8.0 * p.ctilde(),
    ])]
}

const REGISTRY: [(&str, Evaluator); 21] = [
    ("co1", co1),
    ("co2", co2),
    ("co3", co3),
    ("co4", co4),
    ("co5", co5),
    ("co6", co6),
    ("co7", co7),
    ("c+1", cp1),
    ("c+2", cp2),
    ("c+3", cp3),
    ("c+4", cp4),
    ("c+5", cp5),
    ("c+6", cp6),
    ("c-1", cm1),
    ("c-2", cm2),
    ("c-3", cm3),
    ("c-4", cm4),
    ("c-5", cm5),
    ("c-6", cm6),
    ("d1", d1),
    ("d2", d2),
];

fn run(
    sys: &SusySystem,
    samples: &[f64],
    tol: f64,
    keep: impl Fn(ConditionGroup) -> bool,
) -> Result<ConditionReport> {
    let selected: Vec<(&str, Evaluator)> = REGISTRY
        .iter()
        .copied()
        .filter(|(id, _)| keep(ConditionGroup::of(id)))
        .collect();
    // per sample, per condition: (max |sum|, max rel, residual of first component)
    let per_sample: Vec<Result<Vec<(f64, f64, f64)>>> = samples
        .par_iter()
        .map(|&q| {
            let p = Point::at(sys, q)?;
            Ok(selected
                .iter()
                .map(|(_, f)| {
                    let eqs = f(&p);
                    let abs = eqs.iter().fold(0.0f64, |m, e| m.max(e.sum.abs()));
                    let rel = eqs
                        .iter()
                        .fold(0.0f64, |m, e| m.max(e.sum.abs() / e.mag.max(1.0)));
                    (abs, rel, eqs[0].sum)
                })
                .collect())
        })
        .collect();
    let rows: Vec<Vec<(f64, f64, f64)>> = per_sample.into_iter().collect::<Result<_>>()?;

    let entries = selected
        .iter()
        .enumerate()
        .map(|(c, (id, _))| {
            let mut e = ConditionEntry {
                id: id.to_string(),
                group: ConditionGroup::of(id),
                max_abs: 0.0,
                max_rel: 0.0,
                worst_q: f64::NAN,
                pass: true,
                spread: None,
            };
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (row, &q) in rows.iter().zip(samples) {
                let (abs, rel, first) = row[c];
                e.max_abs = e.max_abs.max(abs);
                if rel > e.max_rel || e.worst_q.is_nan() || rel.is_nan() {
                    e.max_rel = if rel.is_nan() {
                        f64::INFINITY
                    } else {
                        rel.max(e.max_rel)
                    };
                    e.worst_q = q;
                }
                lo = lo.min(first);
                hi = hi.max(first);
            }
            if e.group == ConditionGroup::FirstIntegral && !rows.is_empty() {
                e.spread = Some(hi - lo);
            }
            e.pass = e.max_rel <= tol;
            e
        })
        .collect();
    Ok(ConditionReport {
        tol,
        samples: samples.len(),
        entries,
    })
}

/// co1..co7.
pub fn check_intertwining_conditions(
    sys: &SusySystem,
    samples: &[f64],
    tol: f64,
) -> Result<ConditionReport> {
    run(sys, samples, tol, |g| g == ConditionGroup::Intertwining)
}

/// c+1..c+6 and c-1..c-6.
pub fn check_superalgebra_conditions(
    sys: &SusySystem,
    samples: &[f64],
    tol: f64,
) -> Result<ConditionReport> {
    run(sys, samples, tol, |g| g == ConditionGroup::Superalgebra)
}

/// d1, d2 against `16 C10` and `8 Ct`.
pub fn check_first_integrals(
    sys: &SusySystem,
    samples: &[f64],
    tol: f64,
) -> Result<ConditionReport> {
    run(sys, samples, tol, |g| g == ConditionGroup::FirstIntegral)
}

/// All registered conditions, in registry order.
pub fn check_all_conditions(
    sys: &SusySystem,
    samples: &[f64],
    tol: f64,
) -> Result<ConditionReport> {
    run(sys, samples, tol, |_| true)
}
