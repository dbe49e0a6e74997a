//! Matrix N-fold supersymmetry: truncated jets, expression parsing, matrix
//! differential operators, Pauli-form constructions of 2x2 second-order
//! systems, and finite-difference spectra.

pub mod config;
pub mod diffops;
pub mod error;
pub mod expr;
pub mod fields;
pub mod grid;
pub mod jets;
pub mod linalg;
pub mod nfold;
pub mod pauli;
pub mod report;
pub mod spectral;
pub mod susy2;

pub use diffops::{residual_between, residual_sup, MatDiffOp, Residual};
pub use error::{Error, Result};
pub use expr::Expr;
pub use fields::{ComplexField, MatField, ScalarField, VectorFieldFn};
pub use grid::Domain;
pub use jets::Jet;
pub use linalg::{CJet, CMat, MatJet};
pub use nfold::{NfoldPair, Side};
pub use pauli::{PauliConst, PauliField};
pub use susy2::{
    build_degenerate, build_nondegenerate, Branch, ConditionReport, DegenSpec, NonDegenSpec,
    SusySystem,
};
