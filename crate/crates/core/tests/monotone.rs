use proptest::prelude::*;
use spm_core::MonotoneGraph;

fn graph_strategy() -> impl Strategy<Value = MonotoneGraph<f64>> {
    prop_oneof![
        (0.1f64..5.0, 0.05f64..0.95).prop_map(|(rho, m)| MonotoneGraph::fast_diffusion(rho, m).unwrap()),
        (0.1f64..5.0).prop_map(|rho| MonotoneGraph::sign(rho).unwrap()),
        (0.0f64..5.0).prop_map(|s| MonotoneGraph::linear(s).unwrap()),
        (0.1f64..5.0, 1.0f64..3.0).prop_map(|(rho, m)| MonotoneGraph::power_law(rho, m).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn resolvent_is_non_expansive(g in graph_strategy(), lambda in 1e-3f64..10.0, r in -100.0f64..100.0, s in -100.0f64..100.0) {
        let jr = g.resolvent(lambda, r).unwrap();
        let js = g.resolvent(lambda, s).unwrap();
        prop_assert!((jr - js).abs() <= (r - s).abs() * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn yosida_is_lipschitz_and_monotone(g in graph_strategy(), lambda in 1e-3f64..10.0, r in -100.0f64..100.0, s in -100.0f64..100.0) {
        let pr = g.yosida(lambda, r).unwrap();
        let ps = g.yosida(lambda, s).unwrap();
        prop_assert!((pr - ps).abs() <= (r - s).abs() / lambda * (1.0 + 1e-9) + 1e-9);
        prop_assert!((pr - ps) * (r - s) >= -1e-9);
    }

    #[test]
    fn yosida_derivative_is_bounded(g in graph_strategy(), lambda in 1e-3f64..10.0, r in -100.0f64..100.0) {
        let d = g.yosida_derivative(lambda, r).unwrap();
        prop_assert!(d >= 0.0 && d <= 1.0 / lambda * (1.0 + 1e-12));
    }
}

#[test]
fn resolvent_of_zero_for_all_graphs() {
    for g in [
        MonotoneGraph::fast_diffusion(2.0, 0.3).unwrap(),
        MonotoneGraph::sign(1.0).unwrap(),
        MonotoneGraph::linear(3.0).unwrap(),
        MonotoneGraph::power_law(1.0, 2.0).unwrap(),
    ] {
        assert_eq!(g.resolvent(0.5, 0.0).unwrap(), 0.0);
        assert_eq!(g.yosida(0.5, 0.0).unwrap(), 0.0);
    }
}

#[test]
fn linear_slope_one_closed_forms() {
    let g = MonotoneGraph::linear(1.0).unwrap();
    for (lambda, r) in [(0.1, 2.0), (1.0, -3.0), (7.0, 0.5)] {
        let y: f64 = g.yosida(lambda, r).unwrap();
        assert!((y - r / (1.0 + lambda)).abs() < 1e-14);
        let d: f64 = g.yosida_derivative(lambda, r).unwrap();
        assert!((d - 1.0 / (1.0 + lambda)).abs() < 1e-14);
    }
}
