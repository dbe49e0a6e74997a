use std::fs;
use std::path::{Path, PathBuf};

use proptest::prelude::*;

use susykit_core::config::ModelConfig;
use susykit_core::nfold::{intertwining_residual, superalgebra_residual};
use susykit_core::report::{verify, VerifyOptions};
use susykit_core::susy2::{
    build_degenerate, build_nondegenerate, check_all_conditions, DegenSpec, NonDegenSpec,
};
use susykit_core::{Domain, Expr, NfoldPair, Side};

const TOL: f64 = 1e-9;

fn configs(dir: &str) -> Vec<PathBuf> {
    let mut paths: Vec<PathBuf> = fs::read_dir(
        Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("tests")
            .join(dir),
    )
    .unwrap()
    .map(|e| e.unwrap().path())
    .filter(|p| p.extension().is_some_and(|x| x == "json"))
    .collect();
    paths.sort();
    paths
}

fn load(path: &Path) -> ModelConfig {
    ModelConfig::from_json(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn every_committed_model_verifies() {
    for path in configs("corpus").into_iter().chain(configs("custom")) {
        let cfg = load(&path);
        let model = cfg.build(false).unwrap();
        let opts = VerifyOptions {
            skip_spectral: true,
            ..Default::default()
        };
        let (report, _) = verify(&cfg, &model, opts).unwrap();
        assert!(report.pass, "{}: {:?}", path.display(), report.failing());
    }
}

#[test]
fn minus_and_plus_sides_agree() {
    let corpus = configs("corpus").into_iter().map(|p| (p, false));
    let witnesses = configs("witness").into_iter().map(|p| (p, true));
    let mut failing = 0;
    for (path, perturb) in corpus.chain(witnesses) {
        let model = load(&path).build(perturb).unwrap();
        let order = model.order.max(model.pair.default_order());
        let pass = |side| {
            intertwining_residual(&model.pair, side, &model.samples, order)
                .unwrap()
                .relative
                <= TOL
        };
        let (minus, plus) = (pass(Side::Minus), pass(Side::Plus));
        assert_eq!(minus, plus, "{}", path.display());
        failing += usize::from(!minus);
    }
    assert!(
        failing >= 2,
        "operator-level witnesses should fail on both sides"
    );
}

#[test]
fn degenerate_models_match_the_generic_assembly() {
    for path in configs("corpus")
        .into_iter()
        .filter(|p| p.to_string_lossy().contains("/dg"))
    {
        let model = load(&path).build(false).unwrap();
        let cross = model.susy().unwrap().cross_check.unwrap();
        assert!(cross.relative <= 1e-10, "{}: {cross:?}", path.display());
    }
}

/// Smooth bounded shapes on [-1, 1], including compositions.
fn shape() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "q",
        "q^2",
        "q^3",
        "sin(q)",
        "cos(q)",
        "tanh(q)",
        "sin(2*q)",
        "cos(q^2)",
        "tanh(sin(q))",
        "q*cos(q)",
        "exp(-q^2)",
        "sin(q)*tanh(q)",
    ])
    .prop_map(String::from)
}

fn combination() -> impl Strategy<Value = String> {
    (shape(), shape(), -0.5f64..0.5, -0.5f64..0.5)
        .prop_map(|(f, g, a, b)| format!("{a}*{f} + {b}*{g}"))
}

fn constant() -> impl Strategy<Value = f64> {
    -2.0f64..2.0
}

fn domain() -> Domain {
    Domain::new(-1.0, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_nondegenerate_specs_satisfy_every_condition(
        w in combination(),
        v in combination(),
        c00 in constant(),
        c0vec in prop::array::uniform3(constant()),
        c10 in constant(),
        ctilde in constant(),
    ) {
        let spec = NonDegenSpec {
            w10: Expr::parse(&format!("3 + {w}")).unwrap(),
            v1: Expr::parse(&v).unwrap(),
            c00,
            c0vec,
            c10,
            ctilde,
            domain: domain(),
            samples: 101,
        };
        let sys = build_nondegenerate(&spec).unwrap();
        let report = check_all_conditions(&sys, &sys.samples, TOL).unwrap();
        prop_assert!(report.all_pass(), "{:?}", report.failing());
        let pair = NfoldPair::from(&sys);
        for side in [Side::Minus, Side::Plus] {
            prop_assert!(superalgebra_residual(&pair, side, &sys.samples, sys.order).unwrap().relative <= TOL);
        }
    }

    #[test]
    fn random_degenerate_specs_satisfy_every_condition(
        w in combination(),
        w00 in combination(),
        c00 in constant(),
        c0vec in prop::array::uniform3(constant()),
        ctilde in constant(),
    ) {
        prop_assume!(c0vec.iter().map(|x| x * x).sum::<f64>() > 1e-2);
        let spec = DegenSpec {
            w10: Expr::parse(&format!("2 + {w}")).unwrap(),
            w00: Expr::parse(&w00).unwrap(),
            c00,
            c0vec,
            ctilde,
            domain: domain(),
            samples: 101,
        };
        let sys = build_degenerate(&spec).unwrap();
        let report = check_all_conditions(&sys, &sys.samples, TOL).unwrap();
        prop_assert!(report.all_pass(), "{:?}", report.failing());
        prop_assert!(sys.cross_check.unwrap().relative <= 1e-10);
    }
}
