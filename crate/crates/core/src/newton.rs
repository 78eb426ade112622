//! Damped Newton iteration on augmented sparse systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{sup_norm, SparseLu, TripletMatrix};

/// A square nonlinear system `F(x) = 0` whose Jacobian is supplied in
/// augmented form (see [`crate::sparse`]).
pub trait AugmentedSystem {
    fn n_unknowns(&self) -> usize;
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn augmented_jacobian(&self, x: &[f64]) -> Result<TripletMatrix>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Stop when the residual sup-norm drops below this.
    pub tol: f64,
    pub max_iters: usize,
    /// Backtrack by halving when a full step does not reduce the residual.
    pub damping: bool,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 30,
            damping: true,
            max_halvings: 30,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

pub fn newton_step(lu: &SparseLu, n: usize, f: &[f64]) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
    lu.solve_reduced(n, &rhs)
}

pub fn damped_newton<S: AugmentedSystem>(
    sys: &S,
    x0: Vec<f64>,
    opts: &NewtonOptions,
) -> Result<NewtonReport> {
    let n = sys.n_unknowns();
    let mut x = x0;
    let mut f = sys.residual(&x)?;
    let mut norm = sup_norm(&f);
    let mut history = vec![norm];
    let mut iterations = 0;
    loop {
        if norm < opts.tol {
            return Ok(NewtonReport {
                x,
                residual_norm: norm,
                iterations,
                history,
            });
        }
        let fail = |iterations: usize, history: Vec<f64>| Error::NoConvergence {
            iterations,
            last_residual: norm,
            history,
        };
        if iterations >= opts.max_iters || !norm.is_finite() {
            return Err(fail(iterations, history));
        }
        let lu = sys.augmented_jacobian(&x)?.factor()?;
        let dx = newton_step(&lu, n, &f)?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + lambda * b).collect();
            match sys.residual(&trial) {
                Ok(ft) => {
                    let nt = sup_norm(&ft);
                    if nt.is_finite() && (!opts.damping || nt < norm) {
                        accepted = Some((trial, ft, nt));
                        break;
                    }
                }
                Err(Error::MetricBreakdown { .. }) if opts.damping => {}
                Err(e) => return Err(e),
            }
            if !opts.damping {
                break;
            }
            lambda *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((xt, ft, nt)) => {
                x = xt;
                f = ft;
                norm = nt;
                history.push(norm);
            }
            None => return Err(fail(iterations, history)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// x^2 - 2 = 0 with an auxiliary unknown a = x^2.
    struct Sqrt2;

    impl AugmentedSystem for Sqrt2 {
        fn n_unknowns(&self) -> usize {
            1
        }
        fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![x[0] * x[0] - 2.0])
        }
        fn augmented_jacobian(&self, x: &[f64]) -> Result<TripletMatrix> {
            let mut m = TripletMatrix::new(2);
            m.push(0, 1, 1.0);
            m.push(1, 1, 1.0);
            m.push(1, 0, -2.0 * x[0]);
            Ok(m)
        }
    }

    #[test]
    fn converges_quadratically() {
        let r = damped_newton(
            &Sqrt2,
            vec![1.0],
            &NewtonOptions {
                tol: 1e-14,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((r.x[0] - 2f64.sqrt()).abs() < 1e-14);
        assert!(r.iterations <= 6);
    }

    #[test]
    fn reports_exhausted_budget() {
        let opts = NewtonOptions {
            tol: 1e-14,
            max_iters: 1,
            ..Default::default()
        };
        match damped_newton(&Sqrt2, vec![10.0], &opts) {
            Err(Error::NoConvergence { history, .. }) => assert_eq!(history.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
