//! JSON model configuration and its validation into a checkable model.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diffops::MatDiffOp;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fields::{ComplexField, MatField, ScalarField};
use crate::grid::Domain;
use crate::linalg::CMat;
use crate::nfold::NfoldPair;
use crate::spectral::Grid;
use crate::susy2::{
    build_degenerate, build_nondegenerate, DegenSpec, NonDegenSpec, Perturbation, SusySystem,
};

pub const DEFAULT_SAMPLES: usize = 201;
pub const DEFAULT_LEVELS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchKind {
    Nondegenerate,
    Degenerate,
    CustomNfold,
}

impl BranchKind {
    pub fn name(self) -> &'static str {
        match self {
            BranchKind::Nondegenerate => "nondegenerate",
            BranchKind::Degenerate => "degenerate",
            BranchKind::CustomNfold => "custom-nfold",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_box_a")]
    pub a: f64,
    #[serde(default = "default_box_b")]
    pub b: f64,
    #[serde(rename = "M", default = "default_m")]
    pub m: usize,
}

fn default_box_a() -> f64 {
    -8.0
}
fn default_box_b() -> f64 {
    8.0
}
fn default_m() -> usize {
    800
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            a: default_box_a(),
            b: default_box_b(),
            m: default_m(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct Tolerances {
    #[serde(default = "default_exact")]
    pub exact_tol: f64,
    #[serde(default = "default_spectral")]
    pub spectral_tol: f64,
    #[serde(default = "default_adjoint")]
    pub adjoint_tol: f64,
    #[serde(default = "default_pairing")]
    pub pairing_tol: f64,
    #[serde(default = "default_quasi")]
    pub quasi_tol: f64,
}

fn default_exact() -> f64 {
    1e-9
}
fn default_spectral() -> f64 {
    1e-2
}
fn default_adjoint() -> f64 {
    1e-11
}
fn default_pairing() -> f64 {
    1e-6
}
fn default_quasi() -> f64 {
    1e-5
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exact_tol: default_exact(),
            spectral_tol: default_spectral(),
            adjoint_tol: default_adjoint(),
            pairing_tol: default_pairing(),
            quasi_tol: default_quasi(),
        }
    }
}

/// Matrix entry given as a real expression or as `{"re": .., "im": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntryExpr {
    Real(String),
    Complex { re: String, im: String },
}

/// Constant matrix entry: a number or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntryNum {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbConfig {
    /// One of `w00`, `v0`, `C10`, `Ctilde`, `C00`.
    pub field: String,
    /// Additive expression (a constant for the constants).
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub branch: BranchKind,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w10: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w00: Option<String>,
    #[serde(rename = "C00", default, skip_serializing_if = "Option::is_none")]
    pub c00: Option<f64>,
    #[serde(rename = "C0vec", default, skip_serializing_if = "Option::is_none")]
    pub c0vec: Option<[f64; 3]>,
    #[serde(rename = "C10", default, skip_serializing_if = "Option::is_none")]
    pub c10: Option<f64>,
    #[serde(rename = "Ctilde", default, skip_serializing_if = "Option::is_none")]
    pub ctilde: Option<f64>,

    /// Custom pairs: matrix size and order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub fold: Option<usize>,
    #[serde(rename = "Vplus", default, skip_serializing_if = "Option::is_none")]
    pub vplus: Option<Vec<Vec<EntryExpr>>>,
    #[serde(rename = "Vminus", default, skip_serializing_if = "Option::is_none")]
    pub vminus: Option<Vec<Vec<EntryExpr>>>,
    /// Coefficients `A_0..A_N` of `P-`.
    #[serde(rename = "Pminus", default, skip_serializing_if = "Option::is_none")]
    pub pminus: Option<Vec<Vec<Vec<EntryExpr>>>>,
    /// Coefficients of `P+`; the formal adjoint of `P-` when absent.
    #[serde(rename = "Pplus", default, skip_serializing_if = "Option::is_none")]
    pub pplus: Option<Vec<Vec<Vec<EntryExpr>>>>,
    /// `C_0..C_{N-1}`.
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub cmats: Option<Vec<Vec<Vec<EntryNum>>>>,

    pub domain: DomainConfig,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_true")]
    pub spectral: bool,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Jet order for the exact checks.
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturb: Option<PerturbConfig>,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}
fn default_true() -> bool {
    true
}
fn default_levels() -> usize {
    DEFAULT_LEVELS
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("field `{field}`: {msg}"))
}

fn required<'a, T>(value: &'a Option<T>, field: &str, branch: BranchKind) -> Result<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| field_err(field, format!("required by the {} branch", branch.name())))
}

fn forbid<T>(value: &Option<T>, field: &str, why: &str) -> Result<()> {
    match value {
        Some(_) => Err(field_err(field, why)),
        None => Ok(()),
    }
}

fn parse_expr(field: &str, text: &str) -> Result<Expr> {
    Expr::parse(text).map_err(|e| field_err(field, e))
}

fn entry_field(field: &str, e: &EntryExpr) -> Result<ComplexField> {
    match e {
        EntryExpr::Real(s) => Ok(ComplexField::real(ScalarField::from_expr(parse_expr(
            field, s,
        )?))),
        EntryExpr::Complex { re, im } => Ok(ComplexField::new(
            ScalarField::from_expr(parse_expr(field, re)?),
            ScalarField::from_expr(parse_expr(field, im)?),
        )),
    }
}

fn matrix_field(field: &str, rows: &[Vec<EntryExpr>], n: usize) -> Result<MatField> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(field_err(field, format!("expected a {n}x{n} matrix")));
    }
    let entries = rows
        .iter()
        .flatten()
        .map(|e| entry_field(field, e))
        .collect::<Result<Vec<_>>>()?;
    Ok(MatField::from_entries(n, entries))
}

fn const_matrix(field: &str, rows: &[Vec<EntryNum>], n: usize) -> Result<CMat> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(field_err(field, format!("expected a {n}x{n} matrix")));
    }
    Ok(CMat::from_fn(n, |i, j| match rows[i][j] {
        EntryNum::Real(x) => Complex64::new(x, 0.0),
        EntryNum::Complex([re, im]) => Complex64::new(re, im),
    }))
}

/// What a config describes, ready for checking.
#[derive(Debug, Clone)]
pub enum ModelKind {
    Susy(Box<SusySystem>),
    Custom,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub branch: BranchKind,
    pub kind: ModelKind,
    pub pair: NfoldPair,
    pub domain: Domain,
    /// Sample points for the exact checks.
    pub samples: Vec<f64>,
    pub grid: Grid,
    pub order: usize,
    pub tolerances: Tolerances,
    /// Set when a perturbation block was applied.
    pub perturbation: Option<String>,
    pub notes: Vec<String>,
}

impl Model {
    pub fn susy(&self) -> Option<&SusySystem> {
        match &self.kind {
            ModelKind::Susy(s) => Some(s),
            ModelKind::Custom => None,
        }
    }
}

impl ModelConfig {
    /// Parses JSON; syntax and schema errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn common(&self) -> Result<(Domain, Grid)> {
        let domain =
            Domain::new(self.domain.a, self.domain.b).map_err(|e| field_err("domain", e))?;
        if self.samples < 3 {
            return Err(field_err("samples", "need at least 3 samples"));
        }
        let grid =
            Grid::new(self.grid.a, self.grid.b, self.grid.m).map_err(|e| field_err("grid", e))?;
        if self.levels == 0 {
            return Err(field_err("levels", "must be positive"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.exactTol", t.exact_tol),
            ("tolerances.spectralTol", t.spectral_tol),
            ("tolerances.adjointTol", t.adjoint_tol),
            ("tolerances.pairingTol", t.pairing_tol),
            ("tolerances.quasiTol", t.quasi_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(field_err(name, "must be a positive number"));
            }
        }
        if let Some(k) = self.order {
            if k < crate::jets::MIN_ORDER {
                return Err(field_err(
                    "K",
                    format!("jet order must be at least {}", crate::jets::MIN_ORDER),
                ));
            }
        }
        Ok((domain, grid))
    }

    fn forbid_custom_fields(&self) -> Result<()> {
        let why = "only used by the custom-nfold branch";
        forbid(&self.n, "n", why)?;
        forbid(&self.fold, "N", why)?;
        forbid(&self.vplus, "Vplus", why)?;
        forbid(&self.vminus, "Vminus", why)?;
        forbid(&self.pminus, "Pminus", why)?;
        forbid(&self.pplus, "Pplus", why)?;
        forbid(&self.cmats, "C", why)
    }

    fn perturbation(&self) -> Result<Option<Perturbation>> {
        let Some(p) = &self.perturb else {
            return Ok(None);
        };
        let expr = parse_expr("perturb.value", &p.value)?;
        let constant = || -> Result<f64> {
            if !expr.is_constant() {
                return Err(field_err(
                    "perturb.value",
                    "must be a constant for this field",
                ));
            }
            expr.eval(0.0).map_err(|e| field_err("perturb.value", e))
        };
        Ok(Some(match p.field.as_str() {
            "w00" => Perturbation::W00(ScalarField::from_expr(expr.clone())),
            "v0" => Perturbation::V0(ScalarField::from_expr(expr.clone())),
            "C10" => Perturbation::C10(constant()?),
            "Ctilde" => Perturbation::Ctilde(constant()?),
            "C00" => Perturbation::C00(constant()?),
            other => {
                return Err(field_err(
                    "perturb.field",
                    format!("unknown field `{other}` (expected w00, v0, C10, Ctilde or C00)"),
                ))
            }
        }))
    }

    /// Validates branch-specific fields and builds the model. The perturb
    /// block is applied only when `allow_perturb` is set.
    pub fn build(&self, allow_perturb: bool) -> Result<Model> {
        let (domain, grid) = self.common()?;
        let mut notes = Vec::new();
        let perturbation = self.perturbation()?;
        let perturbation = match (perturbation, allow_perturb) {
            (Some(p), true) => Some(p),
            (Some(_), false) => {
                notes.push("perturb block ignored (needs --allow-perturb)".to_string());
                None
            }
            (None, _) => None,
        };
        let order = self.order.unwrap_or(crate::jets::DEFAULT_ORDER);

        let (kind, pair, samples) = match self.branch {
            BranchKind::Nondegenerate | BranchKind::Degenerate => {
                self.forbid_custom_fields()?;
                let b = self.branch;
                let w10 = parse_expr("w10", required(&self.w10, "w10", b)?)?;
                let c00 = self.c00.unwrap_or(0.0);
                let c0vec = *required(&self.c0vec, "C0vec", b)?;
                let ctilde = self.ctilde.unwrap_or(0.0);
                let mut sys = if b == BranchKind::Nondegenerate {
                    forbid(
                        &self.w00,
                        "w00",
                        "determined by the construction in the nondegenerate branch",
                    )?;
                    let v1 = parse_expr("v1", required(&self.v1, "v1", b)?)?;
                    let c10 = *required(&self.c10, "C10", b)?;
                    build_nondegenerate(&NonDegenSpec {
                        w10,
                        v1,
                        c00,
                        c0vec,
                        c10,
                        ctilde,
                        domain,
                        samples: self.samples,
                    })?
                } else {
                    forbid(
                        &self.c10,
                        "C10",
                        "not independent in the degenerate branch (C10 = Ctilde * |C0vec|)",
                    )?;
                    forbid(
                        &self.v1,
                        "v1",
                        "fixed as w10 / |C0vec| in the degenerate branch",
                    )?;
                    let w00 = parse_expr("w00", required(&self.w00, "w00", b)?)?;
                    build_degenerate(&DegenSpec {
                        w10,
                        w00,
                        c00,
                        c0vec,
                        ctilde,
                        domain,
                        samples: self.samples,
                    })?
                };
                sys.order = order;
                if let Some(p) = &perturbation {
                    sys = sys.perturbed(p);
                }
                if !sys.excluded.is_empty() {
                    notes.push(format!(
                        "{} sample(s) excluded where the construction is singular: {:?}",
                        sys.excluded.len(),
                        sys.excluded
                    ));
                }
                let pair = NfoldPair::from(&sys);
                let samples = sys.samples.clone();
                (ModelKind::Susy(Box::new(sys)), pair, samples)
            }
            BranchKind::CustomNfold => {
                let b = self.branch;
                for (field, present) in [
                    ("w10", self.w10.is_some()),
                    ("v1", self.v1.is_some()),
                    ("w00", self.w00.is_some()),
                    ("C00", self.c00.is_some()),
                    ("C0vec", self.c0vec.is_some()),
                    ("C10", self.c10.is_some()),
                    ("Ctilde", self.ctilde.is_some()),
                ] {
                    if present {
                        return Err(field_err(field, "not used by the custom-nfold branch"));
                    }
                }
                if perturbation.is_some() {
                    return Err(field_err("perturb", "only supported for the 2x2 branches"));
                }
                let n = *required(&self.n, "n", b)?;
                let fold = *required(&self.fold, "N", b)?;
                if n == 0 || fold == 0 {
                    return Err(field_err(
                        if n == 0 { "n" } else { "N" },
                        "must be positive",
                    ));
                }
                let vplus = matrix_field("Vplus", required(&self.vplus, "Vplus", b)?, n)?;
                let vminus = matrix_field("Vminus", required(&self.vminus, "Vminus", b)?, n)?;
                let coeffs = |field: &str, tables: &[Vec<Vec<EntryExpr>>]| -> Result<MatDiffOp> {
                    if tables.len() != fold + 1 {
                        return Err(field_err(
                            field,
                            format!("expected {} coefficient matrices A_0..A_N", fold + 1),
                        ));
                    }
                    let fields = tables
                        .iter()
                        .map(|t| matrix_field(field, t, n))
                        .collect::<Result<Vec<_>>>()?;
                    MatDiffOp::from_coeffs(fields).map_err(|e| field_err(field, e))
                };
                let pminus = coeffs("Pminus", required(&self.pminus, "Pminus", b)?)?;
                let pplus = match &self.pplus {
                    Some(t) => coeffs("Pplus", t)?,
                    None => pminus.formal_adjoint(),
                };
                let cm = required(&self.cmats, "C", b)?;
                if cm.len() != fold {
                    return Err(field_err(
                        "C",
                        format!("expected {fold} constant matrices C_0..C_(N-1)"),
                    ));
                }
                let cmats = cm
                    .iter()
                    .map(|m| const_matrix("C", m, n))
                    .collect::<Result<Vec<_>>>()?;
                let pair = NfoldPair::new(
                    MatDiffOp::schrodinger(vplus),
                    MatDiffOp::schrodinger(vminus),
                    pminus,
                    pplus,
                    cmats,
                )
                .map_err(|e| Error::Config(e.to_string()))?;
                (ModelKind::Custom, pair, domain.uniform(self.samples))
            }
        };
        Ok(Model {
            branch: self.branch,
            kind,
            pair,
            domain,
            samples,
            grid,
            order,
            tolerances: self.tolerances,
            perturbation: perturbation.map(|p| p.describe()),
            notes,
        })
    }
}
