use edm_core::newton::{damped_newton, AugmentedSystem, NewtonOptions};
use edm_core::real::{Dual, Real, Sparse};
use edm_core::sparse::{smallest_singular_value, TripletMatrix};
use edm_core::Error;
use proptest::prelude::*;

/// Tridiagonal, diagonally dominant test matrix.
fn tridiagonal(diag: &[f64], off: f64) -> TripletMatrix {
    let n = diag.len();
    let mut m = TripletMatrix::new(n);
    for (i, d) in diag.iter().enumerate() {
        m.push(i, i, *d);
        if i > 0 {
            m.push(i, i - 1, off);
        }
        if i + 1 < n {
            m.push(i, i + 1, off);
        }
    }
    m
}

/// `x_i^3 + x_i - c_i = 0` for each component, written with one auxiliary
/// unknown `y_i = x_i^3` so that the augmented form is exercised.
struct Cubic {
    c: Vec<f64>,
}

impl AugmentedSystem for Cubic {
    fn n_unknowns(&self) -> usize {
        self.c.len()
    }

    fn residual(&self, x: &[f64]) -> edm_core::Result<Vec<f64>> {
        Ok(x.iter()
            .zip(&self.c)
            .map(|(x, c)| x * x * x + x - c)
            .collect())
    }

    fn augmented_jacobian(&self, x: &[f64]) -> edm_core::Result<TripletMatrix> {
        let n = x.len();
        let mut m = TripletMatrix::new(2 * n);
        for i in 0..n {
            // Row i: dy + dx; row n + i: dy - 3 x^2 dx = 0.
            m.push(i, n + i, 1.0);
            m.push(i, i, 1.0);
            m.push(n + i, n + i, 1.0);
            m.push(n + i, i, -3.0 * x[i] * x[i]);
        }
        Ok(m)
    }
}

#[test]
fn newton_solves_an_augmented_system() {
    let sys = Cubic {
        c: vec![2.0, 10.0, -30.0, 0.5],
    };
    let rep = damped_newton(
        &sys,
        vec![0.0; 4],
        &NewtonOptions {
            tol: 1e-12,
            ..NewtonOptions::default()
        },
    )
    .unwrap();
    assert!(rep.residual_norm < 1e-12);
    assert!((rep.x[0] - 1.0).abs() < 1e-12);
    assert_eq!(rep.history.len(), rep.iterations + 1);
}

#[test]
fn newton_reports_failure() {
    let sys = Cubic { c: vec![1e6] };
    let opts = NewtonOptions {
        tol: 1e-12,
        max_iters: 2,
        ..NewtonOptions::default()
    };
    match damped_newton(&sys, vec![0.0], &opts) {
        Err(Error::NoConvergence {
            iterations,
            history,
            ..
        }) => {
            assert_eq!(iterations, 2);
            assert!(!history.is_empty());
        }
        other => panic!("expected NoConvergence, got {other:?}"),
    }
}

#[test]
fn singular_matrix_is_reported() {
    let mut m = TripletMatrix::new(2);
    m.push(0, 0, 1.0);
    m.push(1, 0, 1.0);
    assert!(m.factor().and_then(|lu| lu.solve(&[1.0, 1.0])).is_err());
}

#[test]
fn sparse_gradients_follow_the_chain_rule() {
    let x = Sparse::variable(1.5, 3);
    let y = Sparse::variable(-0.5, 7);
    let f = (x * y + x.exp()).sqrt() / (y - 2.0);
    let h = 1e-7;
    let eval = |a: f64, b: f64| (a * b + a.exp()).sqrt() / (b - 2.0);
    let g: Vec<(usize, f64)> = f.gradient().collect();
    assert_eq!(g.iter().map(|p| p.0).collect::<Vec<_>>(), vec![3, 7]);
    let dx = (eval(1.5 + h, -0.5) - eval(1.5 - h, -0.5)) / (2.0 * h);
    let dy = (eval(1.5, -0.5 + h) - eval(1.5, -0.5 - h)) / (2.0 * h);
    assert!((g[0].1 - dx).abs() < 1e-7 && (g[1].1 - dy).abs() < 1e-7);
    assert_eq!(f.val(), eval(1.5, -0.5));
}

proptest! {
    #[test]
    fn lu_solves_dominant_systems(diag in prop::collection::vec(3.0f64..10.0, 2..60), off in -1.0f64..1.0) {
        let m = tridiagonal(&diag, off);
        let lu = m.factor().unwrap();
        let b: Vec<f64> = (0..diag.len()).map(|i| (i as f64).sin()).collect();
        let x = lu.solve(&b).unwrap();
        let r = m.matvec(&x);
        for (a, c) in r.iter().zip(&b) {
            prop_assert!((a - c).abs() < 1e-12);
        }
        let xt = lu.solve_transpose(&b).unwrap();
        // Symmetric, so both solves agree.
        for (a, c) in x.iter().zip(&xt) {
            prop_assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn smallest_singular_value_of_diagonal(diag in prop::collection::vec(0.1f64..10.0, 1..40)) {
        let m = tridiagonal(&diag, 0.0);
        let s = smallest_singular_value(&m.factor().unwrap(), diag.len()).unwrap();
        let mut sorted = diag.clone();
        sorted.sort_by(f64::total_cmp);
        // Never below sigma_min; accurate once the two smallest are apart.
        prop_assert!(s >= sorted[0] * (1.0 - 1e-12));
        if sorted.len() == 1 || sorted[1] > 1.05 * sorted[0] {
            prop_assert!((s / sorted[0] - 1.0).abs() < 1e-9, "{} vs {}", s, sorted[0]);
        }
    }

    #[test]
    fn dual_numbers_differentiate(a in -2.0f64..2.0, b in 0.1f64..3.0) {
        let x = Dual::new(a, 1.0);
        let f = (x * x + b).sqrt() * (x * 0.5).exp() - x / b;
        let exact = a / (a * a + b).sqrt() * (0.5 * a).exp() + (a * a + b).sqrt() * 0.5 * (0.5 * a).exp() - 1.0 / b;
        prop_assert!((f.d - exact).abs() < 1e-12 * (1.0 + exact.abs()));
    }
}
