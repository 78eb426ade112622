mod common;

use edm_core::continuation::newton_correct;
use edm_core::newton::NewtonOptions;
use edm_core::physical::{diagnostics, reconstruct, unscaled_residual};
use edm_core::verify::{adm_mass_leading_order, random_smooth_state, scaling_oracle_error};
use edm_core::Error;
use proptest::prelude::*;

#[test]
fn reconstruct_needs_positive_eps() {
    let lim = common::limit(100);
    assert!(reconstruct(&lim.state, &common::params()).is_err());
}

#[test]
fn reconstruction_rescales_the_grid() {
    let g = common::model_grid(100);
    let s = random_smooth_state(&g, 1e-2, 0).unwrap();
    let phys = reconstruct(&s, &common::params()).unwrap();
    assert!((phys.grid.r_max() - 10.0 * g.r_max()).abs() < 1e-9);
    assert_eq!(phys.omega, 1.0 - 1e-2);
    assert_eq!(phys.phi1.values().len(), 100);
    for (a, big) in phys.a.values().iter().zip(phys.big_a()) {
        assert_eq!(1.0 + a, big);
    }
}

#[test]
fn solution_diagnostics() {
    let lim = common::limit(1000);
    let p = common::params();
    let eps = 1e-3;
    let opts = NewtonOptions {
        tol: 1e-10,
        ..NewtonOptions::default()
    };
    let c = newton_correct(eps, &lim.state.with_eps(eps), &p, &opts).unwrap();
    let phys = reconstruct(&c.state, &p).unwrap();
    let d = diagnostics(&phys).unwrap();
    assert!(d.min_a > 0.0 && d.max_a <= 1.0);
    assert!(d.adm_spread < 0.05);
    let lead = adm_mass_leading_order(&p, lim.ground_state.l2_mass, eps);
    assert!(
        (d.adm_mass / lead - 1.0).abs() < 0.05,
        "{} {}",
        d.adm_mass,
        lead
    );
    // A solution of the scaled system solves the physical one up to rounding.
    let res = unscaled_residual(&phys).unwrap().sup_norms();
    assert!(res.iter().all(|r| *r < 1e-10), "{res:?}");
    assert_eq!(d.unscaled_residual_norms, res);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn physical_residual_is_scaled_residual_times_eps_power(
        seed in 0u64..100_000,
        eps in prop::sample::select(vec![1e-5, 1e-4, 1e-3, 1e-2, 3e-2]),
    ) {
        let g = common::model_grid(300);
        let s = random_smooth_state(&g, eps, seed).unwrap();
        // The identity needs a positive metric, which large eps can break for some states.
        let res = scaling_oracle_error(&s, &common::params(), None);
        prop_assume!(eps <= 1e-2 || !matches!(res, Err(Error::MetricBreakdown { .. })));
        let err = res.unwrap();
        prop_assert!(err.iter().all(|e| *e < 1e-8), "{:?}", err);
    }
}
