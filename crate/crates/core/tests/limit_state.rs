mod common;

use std::f64::consts::PI;

use edm_core::limit_state::ScaledState;
use edm_core::potentials::newtonian_potential;
use proptest::prelude::*;

#[test]
fn limit_state_relations() {
    let lim = common::limit(1000);
    let s = &lim.state;
    let p = common::params();
    let w = newtonian_potential(&lim.ground_state.phi).unwrap();
    for ((tau, zeta), wv) in s.tau.iter().zip(&s.zeta).zip(w.values()) {
        assert!((tau - 8.0 * PI * p.m() * wv).abs() < 1e-12 * tau.abs());
        assert!((zeta - 8.0 * PI * p.e() * wv).abs() < 1e-12 * tau.abs());
    }
    assert_eq!(s.eps, 0.0);
    assert_eq!(&s.phi[..], lim.ground_state.phi.values());
    // Model grid is the canonical one shrunk by sqrt(2m).
    assert!((s.grid.r_max() - 40.0 / 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn rejects_mismatched_lengths() {
    let g = common::model_grid(20);
    let v = vec![0.0; 20];
    assert!(ScaledState::new(
        g.clone(),
        0.0,
        v.clone(),
        vec![0.0; 19],
        v.clone(),
        v.clone()
    )
    .is_err());
    assert!(ScaledState::from_vector(g, 0.0, &[0.0; 79]).is_err());
}

proptest! {
    #[test]
    fn vector_round_trip(seed in 0u64..1000, n in 3usize..60) {
        let g = common::model_grid(n);
        let x: Vec<f64> = (0..4 * n).map(|i| ((i as u64 * 7919 + seed) % 1000) as f64 / 1000.0).collect();
        let s = ScaledState::from_vector(g, 0.1, &x).unwrap();
        prop_assert_eq!(s.to_vector(), x);
        prop_assert_eq!(s.with_eps(0.2).eps, 0.2);
        prop_assert_eq!(s.sup_distance(&s.with_eps(0.3)), 0.0);
    }
}
