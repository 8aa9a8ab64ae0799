use fcls_core::graph::EdgeVector;
use fcls_core::penalty::{fcls_value, Penalty};
use proptest::prelude::*;

fn penalties() -> Vec<Penalty<f64>> {
    vec![
        Penalty::scad(1.0, 2.1).unwrap(),
        Penalty::scad(0.4, 3.7).unwrap(),
        Penalty::mcp(0.8, 2.5).unwrap(),
        Penalty::mcp(1.5, 1.2).unwrap(),
        Penalty::lasso(0.7).unwrap(),
    ]
}

fn kinks(p: &Penalty<f64>) -> Vec<f64> {
    let mut k = vec![0.0, p.tau];
    if let Some(b2) = p.b2 {
        k.push(b2 * p.tau);
    }
    k
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn midpoint_concavity(s in 0.0f64..10.0, gap in 0.0f64..10.0) {
        let t = s + gap;
        for p in penalties() {
            let mid = p.g_value(0.5 * (s + t)).unwrap();
            let avg = 0.5 * (p.g_value(s).unwrap() + p.g_value(t).unwrap());
            prop_assert!(mid >= avg - 1e-12);
        }
    }

    #[test]
    fn supergradient_bound(s in 0.0f64..10.0, t in 0.0f64..10.0) {
        for p in penalties() {
            let lhs = p.g_value(t).unwrap() - p.g_value(s).unwrap();
            let rhs = p.g_prime(s).unwrap() * (t - s);
            prop_assert!(lhs <= rhs + 1e-10, "{:?}: {lhs} > {rhs}", p.kind);
        }
    }

    #[test]
    fn derivative_matches_finite_differences(t in 0.01f64..10.0) {
        for p in penalties() {
            let h = 1e-6 * t.max(1.0);
            if kinks(&p).iter().any(|k| (t - k).abs() < 2.0 * h) {
                continue;
            }
            let fd = (p.g_value(t + h).unwrap() - p.g_value(t - h).unwrap()) / (2.0 * h);
            let g = p.g_prime(t).unwrap();
            prop_assert!((fd - g).abs() <= 1e-6 * g.abs().max(1.0), "{:?} at {t}: {fd} vs {g}", p.kind);
        }
    }

    #[test]
    fn lasso_fcls_is_l1(values in proptest::collection::vec(-3.0f64..3.0, 10)) {
        let b = EdgeVector::from_vec(5, values).unwrap();
        let p = Penalty::lasso(1.0).unwrap();
        prop_assert!((fcls_value(&p, &b).unwrap() - b.l1_norm()).abs() < 1e-10);
    }
}
