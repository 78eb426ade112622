use edm_core::potentials::{cumulative_charge, mixed_potential, newtonian_potential};
use edm_core::{build_grid, GridSpec, RadialField, Tail};
use edm_oracles::brute_force_potential;
use proptest::prelude::*;

#[test]
fn requires_vanishing_field() {
    let g = build_grid(GridSpec::uniform(10, 1.0)).unwrap();
    let f = RadialField::from_fn(g, |_| 1.0, 0, Tail::Free).unwrap();
    assert!(newtonian_potential(&f).is_err());
    assert!(cumulative_charge(&f).is_err());
}

#[test]
fn gaussian_potential_converges_to_closed_form() {
    // phi = r exp(-r^2 / 2): W(0) = int r exp(-r^2) = 1/2.
    let w0 = |n| {
        let g = build_grid(GridSpec::geometric(n, 12.0, 1.0 + 2.0 / n as f64)).unwrap();
        let f = RadialField::from_fn(g, |r| r * (-r * r / 2.0).exp(), 1, Tail::Zero).unwrap();
        newtonian_potential(&f).unwrap().values()[0]
    };
    let (a, b) = ((w0(400) - 0.5).abs(), (w0(800) - 0.5).abs());
    assert!(b < 1e-4 && a / b > 3.0, "{a} {b}");
}

proptest! {
    #[test]
    fn sweeps_match_brute_force(n in 3usize..120, q in 1.0f64..1.05, s in 0.3f64..3.0, c in 0.1f64..2.0) {
        let g = build_grid(GridSpec::geometric(n, 10.0, q)).unwrap();
        let f = RadialField::from_fn(g.clone(), |r| c * r * (-r * r / (2.0 * s * s)).exp(), 1, Tail::Free).unwrap();
        let w = newtonian_potential(&f).unwrap();
        let rho: Vec<f64> = f.values().iter().map(|v| v * v).collect();
        let oracle = brute_force_potential(g.nodes(), g.weights(), &rho);
        for (a, b) in w.values().iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn potential_is_positive_and_decreasing(n in 3usize..200, s in 0.3f64..3.0) {
        let g = build_grid(GridSpec::uniform(n, 10.0)).unwrap();
        let f = RadialField::from_fn(g, |r| r * (-r / s).exp(), 1, Tail::Free).unwrap();
        let w = newtonian_potential(&f).unwrap();
        prop_assert!(w.values().iter().all(|v| *v > 0.0));
        prop_assert!(w.values().windows(2).all(|p| p[1] <= p[0]));
    }

    #[test]
    fn mixed_potential_is_linear_and_consistent(n in 3usize..150, a in -2.0f64..2.0) {
        let g = build_grid(GridSpec::uniform(n, 8.0)).unwrap();
        let phi = RadialField::from_fn(g.clone(), |r| r * (-r).exp(), 1, Tail::Free).unwrap();
        let h: Vec<f64> = phi.values().iter().map(|v| a * v).collect();
        let mixed = mixed_potential(&phi, &h).unwrap();
        let w = newtonian_potential(&phi).unwrap();
        for (x, y) in mixed.iter().zip(w.values()) {
            prop_assert!((x - a * y).abs() <= 1e-12 * y.abs());
        }
    }

    #[test]
    fn charge_total_matches_last_entry(n in 3usize..200, s in 0.3f64..3.0) {
        let g = build_grid(GridSpec::uniform(n, 10.0)).unwrap();
        let f = RadialField::from_fn(g, |r| r * (-r / s).exp(), 1, Tail::Free).unwrap();
        let c = cumulative_charge(&f).unwrap();
        prop_assert_eq!(c.total, *c.charge.values().last().unwrap());
        prop_assert!(c.charge.values().windows(2).all(|p| p[1] >= p[0]));
    }
}
