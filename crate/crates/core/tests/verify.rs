mod common;

use edm_core::edm_system::Mutation;
use edm_core::verify::{loglog_slope, random_smooth_state, run_verify, VerifyConfig};
use proptest::prelude::*;

fn config(mutation: Option<Mutation>) -> VerifyConfig {
    VerifyConfig {
        params: common::params(),
        grid: common::canonical_spec(500),
        tol: 1e-10,
        seed: 0,
        n_random: 20,
        mutation,
    }
}

#[test]
fn default_suite_passes() {
    let report = run_verify(&config(None)).unwrap();
    let failed: Vec<_> = report.failures().iter().map(|c| c.name.clone()).collect();
    assert!(report.all_passed(), "{failed:?}");
    let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
    for expected in ["choquard_residual", "scaling_oracle", "anchor_residual"] {
        assert!(names.contains(&expected), "missing {expected}");
    }
}

#[test]
fn every_mutation_is_caught() {
    for mu in [Mutation::K1, Mutation::K2, Mutation::K3, Mutation::K4] {
        let report = run_verify(&config(Some(mu))).unwrap();
        let failed: Vec<&str> = report.failures().iter().map(|c| c.name.as_str()).collect();
        assert!(failed.contains(&"scaling_oracle"), "{mu:?}: {failed:?}");
    }
}

#[test]
fn random_states_are_reproducible() {
    let g = common::model_grid(80);
    let a = random_smooth_state(&g, 1e-3, 42).unwrap();
    let b = random_smooth_state(&g, 1e-3, 42).unwrap();
    let c = random_smooth_state(&g, 1e-3, 43).unwrap();
    assert_eq!(a.to_vector(), b.to_vector());
    assert_ne!(a.to_vector(), c.to_vector());
}

proptest! {
    #[test]
    fn random_states_respect_the_boundary_shapes(seed in 0u64..100_000) {
        let g = common::model_grid(200);
        let s = random_smooth_state(&g, 1e-2, seed).unwrap();
        let (r, d) = (g.nodes(), g.dual_nodes());
        // phi ~ r and chi ~ r^2 at the origin.
        prop_assert!(s.phi[0].abs() <= 0.1 * r[0] * 3.0);
        prop_assert!(s.chi[0].abs() <= 0.1 * d[0] * d[0] * 3.0);
        prop_assert!(s.to_vector().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn loglog_slope_recovers_powers(p in -3.0f64..3.0, c in 0.01f64..100.0) {
        let x = [1e-4f64, 1e-3, 1e-2, 1e-1];
        let y: Vec<f64> = x.iter().map(|v| c * v.powf(p)).collect();
        prop_assert!((loglog_slope(&x, &y) - p).abs() < 1e-10);
    }
}
