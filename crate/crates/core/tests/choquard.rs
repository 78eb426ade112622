mod common;

use edm_core::build_grid;
use edm_core::choquard::{
    check_nondegeneracy, choquard_residual, rescale_to_model, solve_canonical_ground_state,
    solve_ground_state, GroundStateOptions, ModelParams,
};
use edm_oracles::choquard_shooting;
use proptest::prelude::*;

#[test]
fn canonical_state_matches_shooting() {
    let oracle = choquard_shooting(1e-3);
    let gs =
        solve_canonical_ground_state(&build_grid(common::canonical_spec(2000)).unwrap(), 1e-10)
            .unwrap();
    assert!(gs.residual_norm < 1e-10);
    assert!((gs.v_prime_origin / oracle.slope_at_origin - 1.0).abs() < 5e-5);
    assert!((gs.l2_mass / oracle.l2_mass - 1.0).abs() < 5e-5);
    assert!(gs.phi.values().iter().all(|v| *v >= 0.0));
    // ln v falls off with slope close to -sqrt(a) = -1; the Coulomb-like tail
    // of the potential bends it slightly at finite r.
    assert!((gs.decay_rate() + 1.0).abs() < 0.1, "{}", gs.decay_rate());
}

#[test]
fn canonical_state_is_nondegenerate() {
    let g = build_grid(common::canonical_spec(1000)).unwrap();
    let gs = solve_canonical_ground_state(&g, 1e-10).unwrap();
    let p = ModelParams::new(0.5, 0.0).unwrap();
    let s = check_nondegeneracy(&gs, &p).unwrap();
    assert!(s > 1e-3, "sigma {s}");
}

#[test]
fn rejects_bad_inputs() {
    let g = build_grid(common::canonical_spec(200)).unwrap();
    assert!(ModelParams::new(1.0, 1.0).is_err());
    assert!(ModelParams::new(-1.0, 0.0).is_err());
    assert!(ModelParams::new(1.0, f64::NAN).is_err());
    assert!(solve_ground_state(&g, -1.0, 1.0, &GroundStateOptions::default()).is_err());
    assert!(solve_canonical_ground_state(&g, 1e-3).is_err());
    let gs = solve_canonical_ground_state(&g, 1e-10).unwrap();
    let model = rescale_to_model(&gs, &common::params()).unwrap();
    assert!(rescale_to_model(&model, &common::params()).is_err());
}

#[test]
fn direct_and_rescaled_solves_agree() {
    let p = common::params();
    let canon =
        solve_canonical_ground_state(&build_grid(common::canonical_spec(800)).unwrap(), 1e-10)
            .unwrap();
    let rescaled = rescale_to_model(&canon, &p).unwrap();
    let direct = solve_ground_state(
        rescaled.phi.grid(),
        p.a_coef(),
        p.beta(),
        &GroundStateOptions::default(),
    )
    .unwrap();
    let gap = common::sup_diff(rescaled.phi.values(), direct.phi.values());
    assert!(gap < 1e-8 * rescaled.phi.sup_norm(), "{gap}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rescaling_transfers_the_solution(m in 0.2f64..3.0, ratio in 0.0f64..0.95) {
        let p = ModelParams::new(m, ratio * m).unwrap();
        let canon = solve_canonical_ground_state(&build_grid(common::canonical_spec(400)).unwrap(), 1e-10).unwrap();
        let gs = rescale_to_model(&canon, &p).unwrap();
        let grid = gs.phi.grid();
        let res = choquard_residual(grid, gs.phi.values(), p.a_coef(), p.beta());
        let scale = p.a_coef() * gs.phi.sup_norm();
        prop_assert!(res.iter().fold(0.0f64, |a, r| a.max(r.abs())) < 1e-8 * scale);
        // phi(r) = sqrt(a / beta) v(sqrt(a) r): the mass scales by sqrt(a) / beta.
        let expected = canon.l2_mass * p.a_coef().sqrt() / p.beta();
        prop_assert!((gs.l2_mass / expected - 1.0).abs() < 1e-12);
    }
}
