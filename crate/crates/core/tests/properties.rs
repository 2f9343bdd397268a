use odekit_core::expr::{compare_on_domain, parse, Bindings, Expr, SampleSpace, Symbol};
use odekit_core::factorization::{
    bessel_j, classify_factorization, consistency_identity, CanonicalForm,
};
use odekit_core::ode::{semigroup_add, AdditionMode, OdeOperator, ParamSpec};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("x".to_string()),
        (-9i32..10).prop_map(|n| n.to_string()),
        (1i32..9, 2i32..6).prop_map(|(a, b)| format!("{a}/{b}")),
    ]
}

/// Expressions finite and smooth on [0.5, 2].
fn expr_text() -> impl Strategy<Value = String> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) - ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            inner.clone().prop_map(|a| format!("({a})/(2 + x^2)")),
            inner.clone().prop_map(|a| format!("-({a})")),
            inner.clone().prop_map(|a| format!("({a})^2")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(sin({a}))")),
            inner.prop_map(|a| format!("ln(2 + cos({a}))")),
        ]
    })
}

fn space() -> SampleSpace {
    SampleSpace::new(0.5, 2.0)
}

fn agree(a: &Expr, b: &Expr, tol: f64) -> bool {
    compare_on_domain(a, b, &space(), 32, 3, tol).unwrap().pass
}

fn flat(b: &str, c: &str) -> OdeOperator {
    OdeOperator::new(
        parse(b).unwrap(),
        parse(c).unwrap(),
        BTreeMap::new(),
        (0.5, 2.0),
    )
    .unwrap()
}

fn inverse_square(a: f64) -> CanonicalForm {
    let r = format!("({a} - m^2)/x^2");
    let params = BTreeMap::from([("m".to_string(), ParamSpec::ranged(1.0, 0.0, 3.0))]);
    let o = OdeOperator::new(Expr::zero(), parse(&r).unwrap(), params, (0.5, 5.0))
        .unwrap()
        .with_index_param("m")
        .unwrap();
    CanonicalForm::from_operator_r(&o)
}

fn coeffs() -> impl Strategy<Value = (String, String)> {
    (expr_text(), expr_text())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn render_then_parse_is_the_same_function(t in expr_text()) {
        let e = parse(&t).unwrap();
        let back = parse(&e.to_string()).unwrap();
        prop_assert!(agree(&e, &back, 1e-12), "{} -> {}", t, e);
    }

    #[test]
    fn derivative_is_linear(f in expr_text(), g in expr_text(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (f, g) = (parse(&f).unwrap(), parse(&g).unwrap());
        let combo = Expr::add(Expr::mul(Expr::float(a), f.clone()), Expr::mul(Expr::float(b), g.clone()));
        let lhs = combo.differentiate(&Symbol::X).unwrap();
        let rhs = Expr::add(
            Expr::mul(Expr::float(a), f.differentiate(&Symbol::X).unwrap()),
            Expr::mul(Expr::float(b), g.differentiate(&Symbol::X).unwrap()),
        );
        // compare against a scale that includes both terms
        let scale = Expr::add(Expr::one(), Expr::add(
            Expr::mul(Expr::float(a.abs()), Expr::pow(f.differentiate(&Symbol::X).unwrap(), Expr::int(2))),
            Expr::mul(Expr::float(b.abs()), Expr::pow(g.differentiate(&Symbol::X).unwrap(), Expr::int(2))),
        ));
        prop_assert!(agree(&Expr::div(lhs, scale.clone()), &Expr::div(rhs, scale), 1e-9));
    }

    #[test]
    fn derivative_matches_central_difference(t in expr_text(), x in 0.6f64..1.9) {
        let e = parse(&t).unwrap();
        let d = e.differentiate(&Symbol::X).unwrap();
        let at = |x: f64| e.eval(&Bindings::new().at(x)).unwrap();
        let h = 1e-4;
        let fd = (at(x - 2.0 * h) - 8.0 * at(x - h) + 8.0 * at(x + h) - at(x + 2.0 * h)) / (12.0 * h);
        let exact = d.eval(&Bindings::new().at(x)).unwrap();
        let scale = 1.0 + exact.abs() + at(x).abs();
        prop_assert!((fd - exact).abs() <= 1e-5 * scale, "{}: {} vs {}", t, exact, fd);
    }

    #[test]
    fn addition_commutes((b1, c1) in coeffs(), (b2, c2) in coeffs(), sum in any::<bool>()) {
        let mode = if sum { AdditionMode::Sum } else { AdditionMode::Average };
        let (p, q) = (flat(&b1, &c1), flat(&b2, &c2));
        let pq = semigroup_add(&p, &q, mode).unwrap();
        let qp = semigroup_add(&q, &p, mode).unwrap();
        prop_assert!(agree(pq.b(), qp.b(), 1e-12) && agree(pq.c(), qp.c(), 1e-12));
        prop_assert_eq!(pq.window(), qp.window());
        prop_assert_eq!(pq.lambda(), qp.lambda());
    }

    #[test]
    fn sum_mode_associates((b1, c1) in coeffs(), (b2, c2) in coeffs(), (b3, c3) in coeffs()) {
        let (p, q, r) = (flat(&b1, &c1), flat(&b2, &c2), flat(&b3, &c3));
        let s = AdditionMode::Sum;
        let left = semigroup_add(&semigroup_add(&p, &q, s).unwrap(), &r, s).unwrap();
        let right = semigroup_add(&p, &semigroup_add(&q, &r, s).unwrap(), s).unwrap();
        prop_assert!(agree(left.b(), right.b(), 1e-10) && agree(left.c(), right.c(), 1e-10));
    }

    /// With constant coefficients the two groupings differ by (c1 - c3)/4.
    #[test]
    fn average_mode_regroups_by_a_quarter(a in -5i32..6, b in -5i32..6, c in -5i32..6) {
        prop_assume!(a != c);
        let ops: Vec<OdeOperator> = [a, b, c].iter().map(|v| flat(&v.to_string(), "0")).collect();
        let m = AdditionMode::Average;
        let left = semigroup_add(&semigroup_add(&ops[0], &ops[1], m).unwrap(), &ops[2], m).unwrap();
        let right = semigroup_add(&ops[0], &semigroup_add(&ops[1], &ops[2], m).unwrap(), m).unwrap();
        let gap = right.b().eval(&Bindings::new().at(1.0)).unwrap() - left.b().eval(&Bindings::new().at(1.0)).unwrap();
        prop_assert!((gap - (a - c) as f64 / 4.0).abs() < 1e-12);
    }

    /// The index map sqrt(m^2 + 1/4 - a) stays real on m in [0, 3] iff a <= 1/4.
    #[test]
    fn inverse_square_potentials_factorize(num in -16i32..3) {
        let v = classify_factorization(&inverse_square(num as f64 / 8.0));
        prop_assert!(v.factorizable, "{}", v.reason);
        let lp = v.ladder.unwrap();
        prop_assert_eq!(lp.family.as_str(), "inverse-square");
        prop_assert!(consistency_identity(&lp, &lp.sample_space()).unwrap().pass);
    }

    #[test]
    fn imaginary_index_map_is_rejected(num in 3i32..17) {
        prop_assert!(!classify_factorization(&inverse_square(num as f64 / 8.0)).factorizable);
    }

    #[test]
    fn bessel_recurrence(mu in 1.0f64..4.0, x in 0.5f64..10.0) {
        let lhs = bessel_j(mu - 1.0, x).unwrap() + bessel_j(mu + 1.0, x).unwrap();
        let rhs = 2.0 * mu / x * bessel_j(mu, x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-11 * (1.0 + rhs.abs()));
    }

    #[test]
    fn sampled_equality_is_seed_deterministic(t in expr_text(), seed in any::<u64>()) {
        let e = parse(&t).unwrap();
        let perturbed = Expr::add(e.clone(), Expr::mul(Expr::float(1e-7), Expr::x()));
        let a = compare_on_domain(&e, &perturbed, &space(), 16, seed, 1e-9).unwrap();
        let b = compare_on_domain(&e, &perturbed, &space(), 16, seed, 1e-9).unwrap();
        prop_assert_eq!(a, b);
    }
}
