use num_complex::Complex64;
use proptest::prelude::*;

use susykit_core::diffops::{residual_between, MatDiffOp};
use susykit_core::expr::{BinOp, Func};
use susykit_core::fields::{ComplexField, MatField};
use susykit_core::jets::{ArithOp, Elementary, Jet};
use susykit_core::spectral::{discretize, eigensolve, Grid};
use susykit_core::{Domain, Expr, PauliConst, ScalarField};

const ORDER: usize = 6;

fn rel_close(a: f64, b: f64, tol: f64, scale: f64) -> bool {
    (a - b).abs() <= tol * scale.max(a.abs()).max(b.abs()).max(1.0)
}

fn jets_close(a: &Jet, b: &Jet, tol: f64) -> bool {
    let scale = a
        .coeffs()
        .iter()
        .chain(b.coeffs())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    a.coeffs().len() == b.coeffs().len()
        && a.coeffs()
            .iter()
            .zip(b.coeffs())
            .all(|(x, y)| rel_close(*x, *y, tol, scale))
}

fn jet(q0: f64) -> impl Strategy<Value = Jet> {
    prop::collection::vec(-1.0f64..1.0, ORDER + 1).prop_map(move |c| Jet::from_derivatives(q0, c))
}

fn falling(k: usize, m: usize) -> f64 {
    (k - m + 1..=k).map(|x| x as f64).product()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polynomials_are_exact(coeffs in prop::collection::vec(-1.0f64..1.0, 1..=ORDER + 1), q0 in -2.0f64..2.0) {
        let x = Jet::variable(q0, ORDER);
        let mut p = Jet::constant(0.0, q0, ORDER);
        for c in coeffs.iter().rev() {
            p = (&p * &x).add_scalar(*c);
        }
        for m in 0..=ORDER {
            let terms: Vec<f64> = coeffs
                .iter()
                .enumerate()
                .filter(|(k, _)| *k >= m)
                .map(|(k, c)| c * falling(k, m) * q0.powi((k - m) as i32))
                .collect();
            let exact: f64 = terms.iter().sum();
            let scale: f64 = terms.iter().map(|t| t.abs()).sum();
            prop_assert!(rel_close(p.deriv(m).unwrap(), exact, 1e-12, scale), "m = {m}");
        }
    }

    #[test]
    fn elementary_derivatives_match_finite_differences(
        which in 0usize..9,
        t in 0.0f64..1.0,
        m in 1usize..=ORDER,
    ) {
        let (f, lo, hi) = [
            (Elementary::Sin, -3.0, 3.0),
            (Elementary::Cos, -3.0, 3.0),
            (Elementary::Exp, -2.0, 2.0),
            (Elementary::Log, 0.5, 3.0),
            (Elementary::Sqrt, 0.5, 3.0),
            (Elementary::Sinh, -2.0, 2.0),
            (Elementary::Cosh, -2.0, 2.0),
            (Elementary::Tanh, -2.0, 2.0),
            (Elementary::Pow(2.5), 0.5, 3.0),
        ][which];
        let q = lo + t * (hi - lo);
        let h = 1e-4;
        let at = |x: f64| Jet::variable(x, ORDER).apply(f).unwrap();
        let fd = (at(q + h).deriv(m - 1).unwrap() - at(q - h).deriv(m - 1).unwrap()) / (2.0 * h);
        let exact = at(q).deriv(m).unwrap();
        prop_assert!(rel_close(fd, exact, 1e-5, 0.0), "{} m = {m} q = {q}: {fd} vs {exact}", f.name());
    }

    #[test]
    fn jet_arithmetic_is_associative_and_distributive(
        (a, b, c) in (-2.0f64..2.0).prop_flat_map(|q0| (jet(q0), jet(q0), jet(q0)))
    ) {
        prop_assert!(jets_close(&((&a * &b) * &c), &(&a * &(&b * &c)), 1e-12));
        prop_assert!(jets_close(&((&a + &b) + &c), &(&a + &(&b + &c)), 1e-12));
        prop_assert!(jets_close(&(&a * &(&b + &c)), &(&(&a * &b) + &(&a * &c)), 1e-12));
        prop_assert!(jets_close(&Jet::arith(ArithOp::Mul, &a, &b).unwrap(), &(&b * &a), 1e-15));
    }
}

fn func() -> impl Strategy<Value = Func> {
    prop::sample::select(vec![
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
    ])
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::Var),
        (0u32..50).prop_map(|n| Expr::Num(n as f64 / 4.0)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        let op = prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div]);
        prop_oneof![
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| Expr::Binary(
                o,
                Box::new(a),
                Box::new(b)
            )),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (
                inner.clone(),
                prop::sample::select(vec![2.0, 3.0, -1.0, 0.5])
            )
                .prop_map(|(a, r)| Expr::Pow(Box::new(a), r)),
            (func(), inner).prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
        ]
    })
}

const EXPRESSIONS: [&str; 50] = [
    "q",
    "2",
    "pi",
    "e",
    "-q",
    "q^2",
    "q^3 - 2*q",
    "1/q",
    "2/(q*q)",
    "(q + 1)^2",
    "(-q)^2",
    "-(q + 1)",
    "--q",
    "q - (q - 1)",
    "q - q - 1",
    "q/(q/2)",
    "(q/q)/2",
    "(q^2)^3",
    "sin(q)",
    "cos(2*q)",
    "sin(q)^2 + cos(q)^2",
    "exp(-q^2/2)",
    "log(1 + q^2)",
    "sqrt(2 + sin(q))",
    "sinh(q)/cosh(q)",
    "tanh(q)^2",
    "1 - tanh(q)^2",
    "2 + tanh(q) + q^2/5",
    "sin(q) + 0.5",
    "cos(q)*sin(q)",
    "exp(sin(q))",
    "tanh(sin(q))",
    "cos(q^2)",
    "q*exp(-q)",
    "1/(1 + q^2)",
    "3.5e-2*q",
    "1.25e3",
    "0.001*q^4 - q",
    "-2*q",
    "(2 + q)^-1",
    "q^0.5",
    "sqrt(q)^3",
    "pi*q/2",
    "e^2",
    "-(-(-q))",
    "2*(3*(4*q))",
    "((q))",
    "q^2 - 1",
    "0.3*cos(q) - 0.7*sin(2*q)",
    "cosh(q)^2 - sinh(q)^2",
];

#[test]
fn printed_expressions_reparse_to_the_same_tree() {
    for s in EXPRESSIONS {
        let e = Expr::parse(s).unwrap_or_else(|err| panic!("{s}: {err}"));
        let printed = e.to_string();
        assert_eq!(Expr::parse(&printed).unwrap(), e, "{s} -> {printed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_trees_round_trip(e in expr()) {
        let printed = e.to_string();
        prop_assert_eq!(Expr::parse(&printed).unwrap(), e, "{}", printed);
    }

    #[test]
    fn evaluation_is_compositional(a in expr(), b in expr(), q in -1.5f64..1.5) {
        let (Ok(ja), Ok(jb)) = (a.eval_jet(q, ORDER), b.eval_jet(q, ORDER)) else {
            return Ok(());
        };
        prop_assume!(ja.is_finite() && jb.is_finite());
        for (op, arith) in [(BinOp::Add, ArithOp::Add), (BinOp::Sub, ArithOp::Sub), (BinOp::Mul, ArithOp::Mul)] {
            let whole = Expr::Binary(op, Box::new(a.clone()), Box::new(b.clone())).eval_jet(q, ORDER).unwrap();
            let parts = Jet::arith(arith, &ja, &jb).unwrap();
            prop_assert_eq!(whole.coeffs(), parts.coeffs());
        }
    }

    #[test]
    fn pauli_product_matches_matrix_product(
        a in prop::array::uniform4(-2.0f64..2.0),
        b in prop::array::uniform4(-2.0f64..2.0),
    ) {
        let (a, b) = (PauliConst::new(a), PauliConst::new(b));
        let direct = &a.to_cmat() * &b.to_cmat();
        let via = a.product(&b).to_cmat();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((via[(i, j)] - direct[(i, j)]).norm() <= 1e-14 * 16.0);
            }
        }
    }
}

/// `c0 + c1 q + c2 sin(q)` with a random imaginary part.
fn entry() -> impl Strategy<Value = ComplexField> {
    (
        prop::array::uniform3(-1.0f64..1.0),
        prop::array::uniform2(-1.0f64..1.0),
    )
        .prop_map(|(r, i)| {
            let re =
                ScalarField::parse(&format!("{} + {}*q + {}*sin(q)", r[0], r[1], r[2])).unwrap();
            let im = ScalarField::parse(&format!("{}*cos(q) + {}*q^2", i[0], i[1])).unwrap();
            ComplexField::new(re, im)
        })
}

fn coefficient() -> impl Strategy<Value = MatField> {
    prop::collection::vec(entry(), 4).prop_map(|e| MatField::from_entries(2, e))
}

fn operator() -> impl Strategy<Value = MatDiffOp> {
    prop::collection::vec(coefficient(), 1..=3).prop_map(|c| MatDiffOp::from_coeffs(c).unwrap())
}

fn samples() -> Vec<f64> {
    Domain::new(-1.5, 1.5).unwrap().uniform(9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn composition_is_associative(a in operator(), b in operator(), c in operator()) {
        let left = a.compose(&b).unwrap().compose(&c).unwrap();
        let right = a.compose(&b.compose(&c).unwrap()).unwrap();
        prop_assert!(residual_between(&left, &right, &samples(), 8).unwrap().relative <= 1e-10);
    }

    #[test]
    fn adjoint_reverses_composition(a in operator(), b in operator()) {
        let lhs = a.compose(&b).unwrap().formal_adjoint();
        let rhs = b.formal_adjoint().compose(&a.formal_adjoint()).unwrap();
        prop_assert!(residual_between(&lhs, &rhs, &samples(), 8).unwrap().relative <= 1e-10);
    }

    #[test]
    fn adjoint_is_an_involution(a in operator()) {
        let back = a.formal_adjoint().formal_adjoint();
        prop_assert!(residual_between(&back, &a, &samples(), 8).unwrap().relative <= 1e-12);
    }

    #[test]
    fn discretized_eigenvectors_are_orthonormal(
        scalar in 0.1f64..1.0,
        mix in prop::array::uniform3(-1.0f64..1.0),
        seed in 0u64..1000,
    ) {
        let v = [
            ScalarField::parse(&format!("{scalar}*q^2")).unwrap(),
            ScalarField::parse(&format!("{}*sin(q)", mix[0])).unwrap(),
            ScalarField::parse(&format!("{}*q", mix[1])).unwrap(),
            ScalarField::parse(&format!("{}*cos(q)", mix[2])).unwrap(),
        ];
        let potential = susykit_core::PauliField::new(v).to_mat_field();
        let h = MatDiffOp::schrodinger(potential);
        let grid = Grid::new(-4.0, 4.0, 40).unwrap();
        let t = discretize(&h, &grid).unwrap().matrix;

        let dense = eigensolve(&t.to_dense(), true).unwrap();
        let vecs = dense.vectors.unwrap();
        let n = vecs.dim();
        let gram = &vecs.adjoint() * &vecs;
        let dev = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (gram[(i, j)] - if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).norm())
            .fold(0.0, f64::max);
        prop_assert!(dev <= 1e-8, "dense gram deviation {dev}");

        let values = t.lowest_eigenvalues(4);
        prop_assume!(values.windows(2).all(|w| w[1] - w[0] > 1e-3));
        let vectors: Vec<Vec<Complex64>> = values
            .iter()
            .map(|&l| t.eigenvector(l, seed).into_iter().flatten().collect())
            .collect();
        for (i, x) in vectors.iter().enumerate() {
            for (j, y) in vectors.iter().enumerate() {
                let dot: Complex64 = x.iter().zip(y).map(|(a, b)| a.conj() * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - Complex64::new(want, 0.0)).norm() <= 1e-8, "<{i},{j}> = {dot}");
            }
        }
    }
}
