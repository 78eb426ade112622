use edm_bench::{anchor, params};
use edm_core::edm_system::scaled_residual;

#[test]
fn anchor_fixture_solves_the_limit_system() {
    let s = anchor(300);
    assert_eq!(s.grid.len(), 300);
    assert!(scaled_residual(0.0, &s, &params()).unwrap().max_norm() < 1e-9);
}
