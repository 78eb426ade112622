//! Sparse square systems backed by faer's LU factorization.
//!
//! Nonlocal integrals enter the residuals through auxiliary unknowns, so the
//! assembled matrices are "augmented": the first `n_primary` rows and columns
//! belong to the field unknowns and the rest to local recurrences for the
//! auxiliary integrals. The Jacobian of the reduced (primary-only) map is the
//! Schur complement; its solves are read off the augmented ones.

use faer::linalg::solvers::Solve;
use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct TripletMatrix {
    n: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl TripletMatrix {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push(Triplet::new(row, col, value));
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|t| (t.row, t.col, t.val))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for t in &self.entries {
            y[t.row] += t.val * x[t.col];
        }
        y
    }

    /// `J x` for the reduced Jacobian of the first `n_primary` unknowns:
    /// the auxiliaries are eliminated by solving their own block.
    pub fn reduced_matvec(&self, n_primary: usize, x: &[f64]) -> Result<Vec<f64>> {
        let mut aux = TripletMatrix::new(self.n - n_primary);
        let mut rhs = vec![0.0; self.n - n_primary];
        for t in &self.entries {
            match (t.row >= n_primary, t.col >= n_primary) {
                (true, true) => aux.push(t.row - n_primary, t.col - n_primary, t.val),
                (true, false) => rhs[t.row - n_primary] -= t.val * x[t.col],
                _ => {}
            }
        }
        let y = if aux.n == 0 {
            Vec::new()
        } else {
            aux.factor()?.solve(&rhs)?
        };
        let mut out = vec![0.0; n_primary];
        for t in self.entries.iter().filter(|t| t.row < n_primary) {
            let v = if t.col < n_primary {
                x[t.col]
            } else {
                y[t.col - n_primary]
            };
            out[t.row] += t.val * v;
        }
        Ok(out)
    }

    pub fn factor(&self) -> Result<SparseLu> {
        if let Some(t) = self.entries.iter().find(|t| !t.val.is_finite()) {
            return Err(Error::Singular(format!(
                "non-finite entry at ({}, {})",
                t.row, t.col
            )));
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &self.entries)
            .map_err(|e| Error::Singular(format!("{e:?}")))?;
        let lu = a.sp_lu().map_err(|e| Error::Singular(format!("{e:?}")))?;
        Ok(SparseLu { lu, n: self.n })
    }
}

pub struct SparseLu {
    lu: Lu<usize, f64>,
    n: usize,
}

impl SparseLu {
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.run(b, false)
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.run(b, true)
    }

    fn run(&self, b: &[f64], transpose: bool) -> Result<Vec<f64>> {
        assert_eq!(b.len(), self.n);
        let mut x = Col::<f64>::from_fn(self.n, |i| b[i]);
        if transpose {
            self.lu.solve_transpose_in_place(x.as_mat_mut());
        } else {
            self.lu.solve_in_place(x.as_mat_mut());
        }
        let out: Vec<f64> = (0..self.n).map(|i| x[i]).collect();
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(Error::Singular("solution is not finite".into()))
        }
    }

    /// `J^{-1} b` for the reduced Jacobian `J` of the first `n_primary` unknowns.
    pub fn solve_reduced(&self, n_primary: usize, b: &[f64]) -> Result<Vec<f64>> {
        let mut full = b.to_vec();
        full.resize(self.n, 0.0);
        let mut x = self.solve(&full)?;
        x.truncate(n_primary);
        Ok(x)
    }

    /// `J^{-T} b` for the reduced Jacobian.
    pub fn solve_reduced_transpose(&self, n_primary: usize, b: &[f64]) -> Result<Vec<f64>> {
        let mut full = b.to_vec();
        full.resize(self.n, 0.0);
        let mut x = self.solve_transpose(&full)?;
        x.truncate(n_primary);
        Ok(x)
    }
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Smallest singular value of the reduced Jacobian by inverse iteration on
/// `(J^T J)^{-1}`. Stops on the eigen-residual `|z - mu x| <= 1e-10 mu` of the
/// Rayleigh quotient `mu = x . z`, which bounds the error in `mu` even when the
/// smallest singular values are clustered. Convergence is geometric in
/// `(sigma_1 / sigma_2)^2`; if 1000 iterations do not reach the tolerance the
/// current estimate, which is never below `sigma_1`, is returned.
pub fn smallest_singular_value(lu: &SparseLu, n_primary: usize) -> Result<f64> {
    // Deterministic start vector with components in every direction.
    let mut x: Vec<f64> = (0..n_primary)
        .map(|i| 1.0 + 0.5 * ((i as f64) * 0.7).sin())
        .collect();
    let nx = l2_norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut mu = f64::NAN;
    for _ in 0..1000 {
        let y = lu.solve_reduced_transpose(n_primary, &x)?;
        let z = lu.solve_reduced(n_primary, &y)?;
        mu = x.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
        if !(mu > 0.0) {
            return Err(Error::Singular("inverse iteration collapsed".into()));
        }
        let res = l2_norm(
            &z.iter()
                .zip(&x)
                .map(|(b, a)| b - mu * a)
                .collect::<Vec<_>>(),
        );
        let nz = l2_norm(&z);
        x = z.iter().map(|v| v / nz).collect();
        if res <= 1e-10 * mu {
            break;
        }
    }
    Ok(1.0 / mu.sqrt())
}
