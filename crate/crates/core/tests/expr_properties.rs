use optcond::expr::{evaluate, fd_grad_hess, grad_hess, parse, DEFAULT_FD_STEP};
use proptest::prelude::*;

const N: usize = 3;

/// Random expression source over x1..x3. Singular primitives are wrapped so
/// their arguments stay bounded away from the edge of the domain.
fn source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (1..=N).prop_map(|i| format!("x{i}")),
        (-3.0..3.0f64).prop_map(|c| format!("{c:.3}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop_oneof![Just('+'), Just('-'), Just('*')]).prop_map(|(a, b, op)| format!("({a}) {op} ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) / (2 + cos({b}))")),
            (inner.clone(), 0u32..4).prop_map(|(a, k)| format!("({a})^{k}")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(sin({a}))")),
            inner.clone().prop_map(|a| format!("log(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("sqrt(2 + sin({a}))")),
            inner.prop_map(|a| format!("-({a})")),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, N)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn inf_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ad_matches_central_differences(src in source(), x in point()) {
        let e = parse(&src, N).unwrap();
        let ad = grad_hess(&e, &x).unwrap();
        let fd = fd_grad_hess(&e, &x, DEFAULT_FD_STEP).unwrap();
        let g = inf_diff(&ad.gradient, &fd.gradient);
        prop_assert!(g <= 1e-6 * (1.0 + inf_norm(&ad.gradient)), "{src}: gradient off by {g:e}");
        let h = inf_diff(&ad.hessian, &fd.hessian);
        prop_assert!(h <= 1e-4 * (1.0 + inf_norm(&ad.hessian)), "{src}: Hessian off by {h:e}");
    }

    #[test]
    fn hessian_is_exactly_symmetric(src in source(), x in point()) {
        let t = grad_hess(&parse(&src, N).unwrap(), &x).unwrap();
        for i in 0..N {
            for j in 0..N {
                prop_assert_eq!(t.hess(i, j).to_bits(), t.hess(j, i).to_bits());
            }
        }
    }

    #[test]
    fn printed_form_parses_back(src in source()) {
        let e = parse(&src, N).unwrap();
        let again = parse(&e.to_string(), N).unwrap();
        prop_assert_eq!(&again, &e);
    }

    #[test]
    fn value_agrees_with_plain_evaluation(src in source(), x in point()) {
        let e = parse(&src, N).unwrap();
        let v = evaluate(&e, &x).unwrap();
        prop_assert_eq!(v.to_bits(), evaluate(&e, &x).unwrap().to_bits());
        let t = grad_hess(&e, &x).unwrap();
        prop_assert!((t.value - v).abs() <= 1e-12 * (1.0 + v.abs()));
    }
}

#[test]
fn stencil_crossing_the_log_singularity_is_a_domain_error() {
    let e = parse("log(x1)", 1).unwrap();
    assert!(grad_hess(&e, &[1e-9]).is_ok());
    assert!(fd_grad_hess(&e, &[1e-9], DEFAULT_FD_STEP).is_err());
}
