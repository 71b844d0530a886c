use proptest::prelude::*;
use swexp::prob::{entropy, kl_divergence};
use swexp::rate_functions::RateFunctions;
use swexp::{CondPmf, Pmf, SolverConfig, Source};

fn pmf(k: usize) -> impl Strategy<Value = Pmf> {
    prop::collection::vec(0.05f64..1.0, k).prop_map(|w| Pmf::from_weights(w).unwrap())
}

fn source(ny: usize) -> impl Strategy<Value = Source> {
    (pmf(2), pmf(ny), pmf(ny))
        .prop_filter_map("degenerate", |(px, a, b)| {
            Source::new(px, CondPmf::new(vec![a.into_vec(), b.into_vec()]).ok()?).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn divergence_nonnegative(p in pmf(4), q in pmf(4)) {
        prop_assert!(kl_divergence(&q, &p).unwrap() >= -1e-15);
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-15);
    }

    #[test]
    fn rate_functions_bounded_and_ordered(src in source(3), q in pmf(2), ee in 0.0f64..0.6) {
        let rf = RateFunctions::new(&src, &q, &SolverConfig::default()).unwrap();
        let p = rf.point(ee).unwrap();
        let h = entropy(&q);
        for v in [p.rho_rb, p.rho_ex, p.rho_sp, p.rho_ub] {
            prop_assert!(v.is_finite() && v >= 0.0 && v <= h + 1e-12);
        }
        prop_assert!(p.rho_ub <= p.rho_rb.min(p.rho_ex) + 1e-12);
        prop_assert!(p.rho_sp <= p.rho_ub + 1e-6);
    }

    #[test]
    fn rate_functions_nondecreasing(src in source(2), q in pmf(2), a in 0.0f64..0.5, d in 0.001f64..0.2) {
        let rf = RateFunctions::new(&src, &q, &SolverConfig::default()).unwrap();
        let lo = rf.point(a).unwrap();
        let hi = rf.point(a + d).unwrap();
        prop_assert!(hi.rho_rb >= lo.rho_rb - 1e-9);
        prop_assert!(hi.rho_ex >= lo.rho_ex - 1e-9);
        prop_assert!(hi.rho_sp >= lo.rho_sp - 1e-9);
    }
}
