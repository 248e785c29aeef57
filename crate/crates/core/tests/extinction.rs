use spm_core::extinction::{
    dimension_condition, dimension_ok, estimate_cm, sobolev_ratio, survival_from_times, theoretical_bound,
    verify_extinction_bound, CmEstimate, ExtinctionSetup, SurvivalPoint,
};
use spm_core::{Error, GridField, GridOperators, GridSpec};

fn setup(m: f64, rho: f64, c2: f64, c_m: f64) -> ExtinctionSetup {
    let est = CmEstimate { m, raw: c_m / 0.9, value: c_m, eigen_min: 0.0, random_min: 0.0, evaluations: 0 };
    ExtinctionSetup::new(m, rho, c2, &est, 1, 1.0).unwrap()
}

#[test]
fn dimension_gate() {
    assert!(dimension_ok(1, 0.5));
    assert!(dimension_ok(2, 0.5));
    assert!(dimension_ok(1, 0.0));
    assert!(!dimension_ok(2, 0.0));
    let err = dimension_condition(2, 0.0).unwrap_err();
    assert!(matches!(err, Error::DimensionCondition { .. }));
    assert!(err.to_string().contains("imposes d = 1"));
    // 2(1+m)/(1-m) = 2 at m = 0 and exceeds 2 for any m > 0
    assert!(dimension_condition(2, 0.01).is_ok());
}

#[test]
fn poincare_limit_at_m_one() {
    let spec = GridSpec::new(1, 31).unwrap();
    let ops = GridOperators::<f64>::new(spec).unwrap();
    let est = estimate_cm(&ops, 1.0, 0).unwrap();
    assert!((est.eigen_min - ops.mu1()).abs() <= 1e-8 * ops.mu1());
    assert!((est.raw - ops.mu1()).abs() <= 1e-8 * ops.mu1());
}

#[test]
fn estimate_is_stable_across_seeds_and_scale_invariant() {
    let spec = GridSpec::new(1, 63).unwrap();
    let ops = GridOperators::<f64>::new(spec).unwrap();
    let a = estimate_cm(&ops, 0.5, 1).unwrap();
    let b = estimate_cm(&ops, 0.5, 2).unwrap();
    assert!((a.raw / b.raw - 1.0).abs() < 0.02, "{} vs {}", a.raw, b.raw);
    assert!(a.raw <= a.eigen_min && a.raw <= a.random_min);
    assert!((a.value - 0.9 * a.raw).abs() < 1e-15);

    let y = GridField::from_fn(spec, |x: &[f64]| x[0] * (1.0 - x[0]).powi(2));
    let r1 = sobolev_ratio(&ops, y.values(), 0.5).unwrap();
    let r2 = sobolev_ratio(&ops, y.scaled(37.0).values(), 0.5).unwrap();
    assert!((r1 / r2 - 1.0).abs() < 1e-12);
    assert!(r1 >= a.raw);
    assert!(sobolev_ratio(&ops, &vec![0.0; 63], 0.5).is_none());
}

#[test]
fn estimate_rejects_bad_dimension() {
    let ops = GridOperators::<f64>::new(GridSpec::new(2, 5).unwrap()).unwrap();
    assert!(estimate_cm(&ops, 0.0, 0).is_err());
}

#[test]
fn bound_special_cases() {
    let s = setup(0.5, 2.0, 0.0, 3.0);
    assert_eq!(theoretical_bound(0.0, &s, 0.3), 0.0);
    let t = 2.0;
    let limit = 0.04f64.sqrt() / (2.0 * 3.0 * 0.5 * t);
    assert!((theoretical_bound(0.04, &s, t) - limit).abs() < 1e-15);

    let tiny = setup(0.5, 2.0, 4e-12, 3.0);
    assert!((tiny.k_m - 1e-12).abs() < 1e-24);
    let b = theoretical_bound(0.04, &tiny, t);
    assert!((b - limit).abs() <= 1e-9 * limit);
    assert_eq!(theoretical_bound(100.0, &s, 1e-3), 1.0);
}

#[test]
fn bound_is_monotone_in_its_parameters() {
    let mut prev_t = f64::INFINITY;
    let base = setup(0.5, 1.0, 0.3, 2.0);
    for k in 1..200 {
        let t = 0.05 * k as f64;
        let b = theoretical_bound(0.01, &base, t);
        assert!(b <= prev_t);
        prev_t = b;
    }
    let mut prev_rho = f64::INFINITY;
    let mut prev_x = 0.0;
    for k in 1..200 {
        let b = theoretical_bound(0.01, &base.with_rho(0.1 * k as f64), 1.0);
        assert!(b <= prev_rho);
        prev_rho = b;
        let bx = theoretical_bound(1e-4 * k as f64, &base, 1.0);
        assert!(bx >= prev_x);
        prev_x = bx;
    }
}

#[test]
fn bound_scales_inversely_with_rho() {
    let s = setup(0.5, 5.0, 0.02, 2.0);
    let b = theoretical_bound(0.01, &s, 1.0);
    let b_small = theoretical_bound(0.01, &s.with_rho(0.5), 1.0);
    assert!((b_small / b - 10.0).abs() < 1e-12);
}

#[test]
fn survival_counting() {
    let grid = [0.05, 0.2, 0.4];
    let s = survival_from_times(&[Some(0.1), Some(0.3)], &grid);
    assert_eq!(s[1].survival, 0.5);
    assert_eq!(s[0].survival, 1.0);
    assert_eq!(s[2].survival, 0.0);
    assert!((s[1].stderr - 0.5f64.powi(2).sqrt() / 2f64.sqrt()).abs() < 1e-15);

    let none = survival_from_times(&[None, None, None], &grid);
    assert!(none.iter().all(|p| p.survival == 1.0 && p.stderr == 0.0));
    let zero = survival_from_times(&[Some(0.0); 4], &grid);
    assert!(zero.iter().all(|p| p.survival == 0.0));
}

#[test]
fn vacuous_bound_is_flagged() {
    let s = setup(0.5, 1e-3, 0.0, 1.0);
    let curve = vec![SurvivalPoint { t: 0.1, survival: 1.0, stderr: 0.0 }];
    let v = verify_extinction_bound(&curve, &s, 1.0);
    assert!(v.passes && v.uninformative && !v.extinction_observed);
}
