mod common;

use edm_core::edm_system::{jacobian, scaled_residual, EdmSystem, Mutation, SCALING_EXPONENTS};
use edm_core::verify::random_smooth_state;
use proptest::prelude::*;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn anchor_is_a_solution_at_eps_zero() {
    let lim = common::limit(1000);
    let r = scaled_residual(0.0, &lim.state, &common::params()).unwrap();
    assert!(r.max_norm() < 1e-9, "{:?}", r.sup_norms());
    for (c, loc) in r.components().iter().zip(r.locations()) {
        assert_eq!(c.len(), loc.len());
    }
}

#[test]
fn anchor_is_not_a_solution_at_positive_eps() {
    let lim = common::limit(500);
    let r = scaled_residual(1e-2, &lim.state.with_eps(1e-2), &common::params()).unwrap();
    assert!(r.max_norm() > 1e-4);
}

#[test]
fn rejects_bad_eps_and_mutation_names() {
    let g = common::model_grid(50);
    assert!(EdmSystem::new(g.clone(), common::params(), -1e-3).is_err());
    assert!(EdmSystem::new(g, common::params(), f64::INFINITY).is_err());
    assert!("k5".parse::<Mutation>().is_err());
    assert_eq!("K2".parse::<Mutation>().unwrap(), Mutation::K2);
    assert_eq!(SCALING_EXPONENTS.p, [1.0, 1.5, 1.0, 1.5]);
}

#[test]
fn mutations_leave_eps_zero_untouched() {
    let lim = common::limit(300);
    let base = scaled_residual(0.0, &lim.state, &common::params()).unwrap();
    for mu in [Mutation::K1, Mutation::K2, Mutation::K3, Mutation::K4] {
        let sys = EdmSystem::new(lim.state.grid.clone(), common::params(), 0.0)
            .unwrap()
            .with_mutation(Some(mu));
        assert_eq!(sys.residual(&lim.state).unwrap(), base);
    }
}

#[test]
fn mutation_changes_only_its_equation() {
    let g = common::model_grid(300);
    let s = random_smooth_state(&g, 1e-2, 3).unwrap();
    let base = scaled_residual(1e-2, &s, &common::params()).unwrap();
    for (k, mu) in [Mutation::K1, Mutation::K2, Mutation::K3, Mutation::K4]
        .into_iter()
        .enumerate()
    {
        let sys = EdmSystem::new(g.clone(), common::params(), 1e-2)
            .unwrap()
            .with_mutation(Some(mu));
        let r = sys.residual(&s).unwrap();
        for c in 0..4 {
            let same = r.components()[c] == base.components()[c];
            // The closing rows of tau and zeta are shared, so only the
            // block of the mutated equation is checked for a change.
            if c == k {
                assert!(!same, "{mu:?} did not change equation {c}");
            } else if c < 2 {
                assert!(same, "{mu:?} changed equation {c}");
            }
        }
    }
}

#[test]
fn dense_jacobian_matches_matrix_free_products() {
    let g = common::model_grid(60);
    let s = random_smooth_state(&g, 1e-2, 11).unwrap();
    let j = jacobian(1e-2, &s, &common::params()).unwrap();
    let dense = j.to_dense().unwrap();
    let n = j.n();
    for col in [0, 17, n / 2, n - 1] {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let ad = j.apply(&e).unwrap();
        for (row, v) in ad.iter().enumerate() {
            assert!(
                (dense[row][col] - v).abs() < 1e-10 * (1.0 + v.abs()),
                "({row}, {col})"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn assembled_jacobian_matches_forward_mode(seed in 0u64..10_000, eps in prop::sample::select(vec![0.0, 1e-4, 1e-3, 1e-2])) {
        let g = common::model_grid(200);
        let s = random_smooth_state(&g, eps, seed).unwrap();
        let j = jacobian(eps, &s, &common::params()).unwrap();
        let d = random_smooth_state(&g, eps, seed + 1).unwrap().to_vector();
        let (a, b) = (j.apply(&d).unwrap(), j.apply_assembled(&d).unwrap());
        let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        prop_assert!(max_abs(&diff) <= 1e-10 * max_abs(&a));
    }

    #[test]
    fn jacobian_is_the_derivative(seed in 0u64..10_000, eps in prop::sample::select(vec![0.0, 1e-3, 1e-2])) {
        let g = common::model_grid(200);
        let s = random_smooth_state(&g, eps, seed).unwrap();
        let sys = EdmSystem::new(g.clone(), common::params(), eps).unwrap();
        let x = s.to_vector();
        let d = random_smooth_state(&g, eps, seed ^ 0x5555).unwrap().to_vector();
        let f0 = sys.residual_vector(&x).unwrap();
        let jd = sys.jacobian_apply(&x, &d).unwrap();
        let rem = |h: f64| {
            let xh: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + h * b).collect();
            let fh = sys.residual_vector(&xh).unwrap();
            let r: Vec<f64> = fh.iter().zip(&f0).zip(&jd).map(|((a, b), j)| a - b - h * j).collect();
            max_abs(&r)
        };
        let (r1, r2) = (rem(1e-2), rem(5e-3));
        // Second-order remainder, unless it is already at rounding level.
        prop_assert!(r1 < 1e-10 * max_abs(&jd) || (r1 / r2 > 3.0 && r1 / r2 < 5.0), "{} {}", r1, r2);
    }

    #[test]
    fn residual_norms_are_consistent(seed in 0u64..10_000) {
        let g = common::model_grid(100);
        let s = random_smooth_state(&g, 1e-3, seed).unwrap();
        let r = scaled_residual(1e-3, &s, &common::params()).unwrap();
        let sup = r.sup_norms();
        let expected = sup.iter().chain(&r.boundary.map(f64::abs)).cloned().fold(0.0, f64::max);
        prop_assert_eq!(r.max_norm(), expected);
        prop_assert!(r.weighted_l2_norms().iter().all(|v| v.is_finite() && *v >= 0.0));
    }
}
