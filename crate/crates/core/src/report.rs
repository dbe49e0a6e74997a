//! The verification battery behind `susykit verify` and its report.
//!
//! Reports hold no wall-clock data so that the same config and seed give
//! byte-identical JSON; timings are returned separately.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{BranchKind, Model, ModelConfig};
use crate::diffops::{residual_between, Residual};
use crate::error::Result;
use crate::fields::{ComplexField, ScalarField, VectorFieldFn};
use crate::jets::Jet;
use crate::nfold::{
    adjoint_pairing_check, intertwining_residual, superalgebra_residual, PairingResult, Side,
};
use crate::spectral::{
    kernel_basis, quasi_solvability_residual, run_spectrum, Grid, QuasiResidual, SpectrumRun,
};
use crate::susy2::{check_all_conditions, ConditionReport};

pub const TOOL_NAME: &str = "susykit";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Quadrature nodes for the adjoint pairing.
pub const PAIRING_POINTS: usize = 2001;

/// Relative tolerance for the degenerate-branch cross-check.
pub const CROSS_CHECK_TOL: f64 = 1e-10;

pub const SPECTRAL_SCOPE: &str = "spectral comparison is numerical evidence on a Dirichlet box, \
restricted to low-lying levels; levels near the walls or the continuum edge are not claimed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo {
            name: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
        }
    }
}

/// Constant matrix as rows of `[re, im]`.
pub type MatrixEcho = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSummary {
    pub branch: BranchKind,
    pub n: usize,
    #[serde(rename = "N")]
    pub fold: usize,
    /// `C_0..C_{N-1}`.
    pub constants: Vec<MatrixEcho>,
    /// Pauli components `(C00, C01, C02, C03)` for the 2x2 branches.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<[f64; 4]>,
    /// `|C0vec|`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub samples_used: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub singular_points: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<Residual>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<String>,
}

impl SystemSummary {
    pub fn of(model: &Model) -> Self {
        let pair = &model.pair;
        let sys = model.susy();
        SystemSummary {
            branch: model.branch,
            n: pair.dim(),
            fold: pair.fold(),
            constants: pair
                .cmats
                .iter()
                .map(|m| {
                    (0..m.dim())
                        .map(|i| (0..m.dim()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                        .collect()
                })
                .collect(),
            c0: sys.map(|s| s.c0().components()),
            c1: sys.map(|s| s.c1().components()),
            c: sys.map(|s| s.c0().norm()),
            samples_used: model.samples.len(),
            excluded: sys.map(|s| s.excluded.clone()).unwrap_or_default(),
            singular_points: sys.map(|s| s.singular_points.clone()).unwrap_or_default(),
            cross_check: sys.and_then(|s| s.cross_check),
            perturbation: model.perturbation.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorChecks {
    pub intertwining_minus: Residual,
    pub intertwining_plus: Residual,
    pub superalgebra_minus: Residual,
    pub superalgebra_plus: Residual,
    /// `formal_adjoint(P-)` against `P+`, coefficientwise.
    pub adjoint_coefficients: Residual,
    pub pairing: PairingResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiSide {
    #[serde(flatten)]
    pub residual: QuasiResidual,
    /// Valid sub-interval when the kernel integration was cut short.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncated: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiChecks {
    pub grid: Grid,
    pub minus: QuasiSide,
    pub plus: QuasiSide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSection {
    pub scope: String,
    #[serde(flatten)]
    pub run: SpectrumRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub tool: ToolInfo,
    pub config: ModelConfig,
    pub seed: u64,
    pub system: SystemSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditions: Option<ConditionReport>,
    pub operator: OperatorChecks,
    pub quasi_solvability: QuasiChecks,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralSection>,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.verdicts
            .iter()
            .filter(|v| !v.pass)
            .map(|v| v.name.as_str())
            .collect()
    }
}

/// Seconds per stage.
pub type Timings = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerifyOptions {
    pub skip_spectral: bool,
    pub levels: Option<usize>,
    pub seed: u64,
}

fn timed<T>(timings: &mut Timings, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f();
    timings.insert(stage.to_string(), start.elapsed().as_secs_f64());
    out
}

/// Gaussian test vectors of width `L/16` centred near the middle of the
/// domain; they are below `1e-13` of their peak at the endpoints.
pub fn gaussian_pair(model: &Model) -> (VectorFieldFn, VectorFieldFn) {
    let (mid, width) = (model.domain.midpoint(), model.domain.length() / 16.0);
    let gaussian = move |shift: f64, amp: f64| {
        let centre = mid + shift * width;
        ComplexField::real(ScalarField::from_fn(
            format!("{amp}*gauss({centre}, {width})"),
            move |q, k| {
                let t = Jet::variable(q, k).add_scalar(-centre).scale(1.0 / width);
                Ok((&t * &t)
                    .scale(-0.5)
                    .apply(crate::jets::Elementary::Exp)?
                    .scale(amp))
            },
        ))
    };
    let n = model.pair.dim();
    let phi = VectorFieldFn::new(
        (0..n)
            .map(|i| gaussian(0.1 * i as f64, 1.0 - 0.25 * i as f64))
            .collect(),
    );
    let psi = VectorFieldFn::new(
        (0..n)
            .map(|i| gaussian(-0.15 * (i + 1) as f64, 0.5 + 0.2 * i as f64))
            .collect(),
    );
    (phi, psi)
}

/// Grid for the kernel integration: the sample points of the exact checks.
pub fn kernel_grid(model: &Model) -> Result<Grid> {
    let m = model
        .samples
        .len()
        .max(crate::spectral::MIN_GRID_POINTS + 2)
        - 2;
    Grid::new(
        model.domain.a,
        model.domain.b,
        m.max(crate::spectral::MIN_GRID_POINTS),
    )
}

pub fn operator_checks(model: &Model) -> Result<OperatorChecks> {
    let pair = &model.pair;
    let order = model.order.max(pair.default_order());
    let s = &model.samples;
    let (phi, psi) = gaussian_pair(model);
    Ok(OperatorChecks {
        intertwining_minus: intertwining_residual(pair, Side::Minus, s, order)?,
        intertwining_plus: intertwining_residual(pair, Side::Plus, s, order)?,
        superalgebra_minus: superalgebra_residual(pair, Side::Minus, s, order)?,
        superalgebra_plus: superalgebra_residual(pair, Side::Plus, s, order)?,
        adjoint_coefficients: residual_between(
            &pair.pminus.formal_adjoint(),
            &pair.pplus,
            s,
            order,
        )?,
        pairing: adjoint_pairing_check(
            &pair.pminus,
            &pair.pplus,
            &phi,
            &psi,
            model.domain,
            PAIRING_POINTS,
        )?,
    })
}

pub fn quasi_checks(model: &Model) -> Result<QuasiChecks> {
    let grid = kernel_grid(model)?;
    let pair = &model.pair;
    let side = |h, p| -> Result<QuasiSide> {
        let basis = kernel_basis(p, &grid)?;
        Ok(QuasiSide {
            residual: quasi_solvability_residual(h, p, &basis)?,
            truncated: basis.truncated,
        })
    };
    let (minus, plus) = rayon::join(
        || side(&pair.hminus, &pair.pminus),
        || side(&pair.hplus, &pair.pplus),
    );
    Ok(QuasiChecks {
        grid,
        minus: minus?,
        plus: plus?,
    })
}

pub fn spectrum(model: &Model, levels: usize, seed: u64) -> Result<SpectrumRun> {
    let pair = &model.pair;
    run_spectrum(
        &pair.hplus,
        &pair.hminus,
        &model.grid,
        levels,
        model.tolerances.spectral_tol,
        seed,
    )
}

fn verdict(name: &str, value: f64, tol: f64) -> Verdict {
    Verdict {
        name: name.into(),
        value,
        tol,
        pass: value.is_finite() && value <= tol,
    }
}

/// Runs every enabled check and collects verdicts.
pub fn verify(
    config: &ModelConfig,
    model: &Model,
    opts: VerifyOptions,
) -> Result<(VerificationReport, Timings)> {
    let mut timings = Timings::new();
    let tol = model.tolerances;
    let mut verdicts = Vec::new();
    let mut notes = model.notes.clone();

    let conditions = match model.susy() {
        Some(sys) => Some(timed(&mut timings, "conditions", || {
            check_all_conditions(sys, &model.samples, tol.exact_tol)
        })?),
        None => None,
    };
    if let Some(c) = &conditions {
        let worst = c.entries.iter().fold(0.0f64, |m, e| m.max(e.max_rel));
        let mut v = verdict("conditions", worst, tol.exact_tol);
        v.pass = c.all_pass();
        verdicts.push(v);
        let failing = c.failing();
        if !failing.is_empty() {
            notes.push(format!("failing conditions: {}", failing.join(", ")));
        }
    }

    let operator = timed(&mut timings, "operator", || operator_checks(model))?;
    verdicts.push(verdict(
        "intertwining_minus",
        operator.intertwining_minus.relative,
        tol.exact_tol,
    ));
    verdicts.push(verdict(
        "intertwining_plus",
        operator.intertwining_plus.relative,
        tol.exact_tol,
    ));
    verdicts.push(verdict(
        "superalgebra_minus",
        operator.superalgebra_minus.relative,
        tol.exact_tol,
    ));
    verdicts.push(verdict(
        "superalgebra_plus",
        operator.superalgebra_plus.relative,
        tol.exact_tol,
    ));
    verdicts.push(verdict(
        "adjoint_coefficients",
        operator.adjoint_coefficients.relative,
        tol.adjoint_tol,
    ));
    verdicts.push(verdict(
        "adjoint_pairing",
        operator.pairing.mismatch,
        tol.pairing_tol,
    ));
    notes.extend(operator.pairing.warnings.iter().cloned());

    if let Some(cc) = model.susy().and_then(|s| s.cross_check) {
        verdicts.push(verdict(
            "degenerate_cross_check",
            cc.relative,
            CROSS_CHECK_TOL,
        ));
    }

    let quasi = timed(&mut timings, "quasi_solvability", || quasi_checks(model))?;
    verdicts.push(verdict(
        "quasi_solvability_minus",
        quasi.minus.residual.value,
        tol.quasi_tol,
    ));
    let expected_dim = model.pair.dim() * model.pair.fold();
    let mut dim = verdict(
        "kernel_dimension",
        quasi.minus.residual.kernel_dim as f64,
        expected_dim as f64,
    );
    dim.pass =
        quasi.minus.residual.kernel_dim == expected_dim && quasi.minus.residual.nodes_used > 0;
    verdicts.push(dim);
    for (name, side) in [("minus", &quasi.minus), ("plus", &quasi.plus)] {
        if let Some((lo, hi)) = side.truncated {
            notes.push(format!("kernel of P{name} integrated on [{lo}, {hi}] only (overflow or singular coefficients)"));
        }
    }

    let spectral = if opts.skip_spectral || !config.spectral {
        None
    } else {
        let levels = opts.levels.unwrap_or(config.levels);
        let run = timed(&mut timings, "spectral", || {
            spectrum(model, levels, opts.seed)
        })?;
        let mut v = verdict(
            "almost_isospectral",
            run.matching.low_lying_unmatched as f64,
            expected_dim as f64,
        );
        v.pass = run.matching.low_lying_unmatched <= expected_dim;
        verdicts.push(v);
        notes.extend(run.warnings.iter().cloned());
        Some(SpectralSection {
            scope: SPECTRAL_SCOPE.into(),
            run,
        })
    };

    let pass = verdicts.iter().all(|v| v.pass);
    let report = VerificationReport {
        tool: ToolInfo::default(),
        config: config.clone(),
        seed: opts.seed,
        system: SystemSummary::of(model),
        conditions,
        operator,
        quasi_solvability: quasi,
        spectral,
        verdicts,
        pass,
        notes,
    };
    Ok((report, timings))
}

/// Column names and rows of a sampled table of matrix functions.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Potentials of both Hamiltonians at `points`: Pauli components for the
/// 2x2 branches, real and imaginary parts of the upper triangle otherwise.
/// Points where evaluation fails are skipped.
pub fn potential_table(model: &Model, points: &[f64]) -> Table {
    let pair = &model.pair;
    let n = pair.dim();
    let mut columns = vec!["q".to_string()];
    for side in ["vplus", "vminus"] {
        if model.susy().is_some() {
            columns.extend((0..4).map(|mu| format!("{side}_{mu}")));
        } else {
            for i in 0..n {
                for j in i..n {
                    columns.push(format!("{side}_re_{i}{j}"));
                    if i != j {
                        columns.push(format!("{side}_im_{i}{j}"));
                    }
                }
            }
        }
    }
    let rows = points
        .iter()
        .filter_map(|&q| {
            let mut row = vec![q];
            for h in [&pair.hplus, &pair.hminus] {
                let v = h
                    .coefficient_values(q, crate::jets::DEFAULT_ORDER)
                    .ok()?
                    .swap_remove(0);
                push_matrix(&mut row, &v, model.susy().is_some());
            }
            row.iter().all(|x| x.is_finite()).then_some(row)
        })
        .collect();
    Table { columns, rows }
}

fn push_matrix(row: &mut Vec<f64>, v: &crate::linalg::CMat, pauli: bool) {
    if pauli {
        // f0 = (a + d)/2, f1 = Re b, f2 = -Im b, f3 = (a - d)/2 for [[a, b], [c, d]]
        row.push(0.5 * (v[(0, 0)].re + v[(1, 1)].re));
        row.push(v[(0, 1)].re);
        row.push(-v[(0, 1)].im);
        row.push(0.5 * (v[(0, 0)].re - v[(1, 1)].re));
        return;
    }
    let n = v.dim();
    for i in 0..n {
        for j in i..n {
            row.push(v[(i, j)].re);
            if i != j {
                row.push(v[(i, j)].im);
            }
        }
    }
}

/// Supercharge coefficients of `P-` at `points` in the same layout.
pub fn supercharge_table(model: &Model, points: &[f64]) -> Table {
    let pair = &model.pair;
    let n = pair.dim();
    let pauli = model.susy().is_some();
    let mut columns = vec!["q".to_string()];
    for k in 0..pair.fold() {
        let name = format!("a{k}");
        if pauli {
            columns.extend((0..4).map(|mu| format!("{name}_{mu}")));
        } else {
            for i in 0..n {
                for j in i..n {
                    columns.push(format!("{name}_re_{i}{j}"));
                    if i != j {
                        columns.push(format!("{name}_im_{i}{j}"));
                    }
                }
            }
        }
    }
    let rows = points
        .iter()
        .filter_map(|&q| {
            let c = pair
                .pminus
                .coefficient_values(q, crate::jets::DEFAULT_ORDER)
                .ok()?;
            let mut row = vec![q];
            for a in c.iter().take(pair.fold()) {
                push_matrix(&mut row, a, pauli);
            }
            row.iter().all(|x| x.is_finite()).then_some(row)
        })
        .collect();
    Table { columns, rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(extra: &str) -> ModelConfig {
        ModelConfig::from_json(&format!(
            r#"{{"branch": "nondegenerate", "w10": "-2*q", "v1": "0", "C0vec": [0, 0, 0],
                "C10": -0.25, "domain": {{"a": -4, "b": 4}}, "grid": {{"M": 400}} {extra}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn harmonic_passes_everything() {
        let cfg = harmonic("");
        let model = cfg.build(false).unwrap();
        let (r, t) = verify(&cfg, &model, VerifyOptions::default()).unwrap();
        assert!(r.pass, "failing: {:?}", r.failing());
        assert!(t.contains_key("spectral"));
        let run = &r.spectral.as_ref().unwrap().run;
        assert_eq!(run.matching.unmatched_plus.len(), 2);
        assert_eq!(r.quasi_solvability.minus.residual.kernel_dim, 4);
    }

    #[test]
    fn perturbed_w00_fails_targeted_conditions() {
        let cfg = harmonic(r#", "perturb": {"field": "w00", "value": "0.1*sin(q)"}"#);
        let model = cfg.build(true).unwrap();
        let opts = VerifyOptions {
            skip_spectral: true,
            ..Default::default()
        };
        let (r, _) = verify(&cfg, &model, opts).unwrap();
        assert!(!r.pass);
        assert!(r.spectral.is_none());
        let c = r.conditions.as_ref().unwrap();
        assert!(!c.get("co2").unwrap().pass && !c.get("co5").unwrap().pass);
        assert!(!r.verdict("quasi_solvability_minus").unwrap().pass);
    }

    #[test]
    fn report_is_deterministic() {
        let cfg = harmonic("");
        let model = cfg.build(false).unwrap();
        let a = serde_json::to_string(&verify(&cfg, &model, VerifyOptions::default()).unwrap().0)
            .unwrap();
        let b = serde_json::to_string(&verify(&cfg, &model, VerifyOptions::default()).unwrap().0)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn potential_columns() {
        let model = harmonic("").build(false).unwrap();
        let t = potential_table(&model, &[1.5]);
        assert_eq!(t.columns[1], "vplus_0");
        assert!((t.rows[0][1] - (1.5f64 * 1.5 / 2.0 - 1.0)).abs() < 1e-12);
        assert!((t.rows[0][5] - (1.5f64 * 1.5 / 2.0 + 1.0)).abs() < 1e-12);
        let s = supercharge_table(&model, &[1.5]);
        assert_eq!(s.columns.len(), 9);
        assert!((s.rows[0][5] + 3.0).abs() < 1e-14);
    }
}
