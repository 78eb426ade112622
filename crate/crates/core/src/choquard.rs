//! Radial Choquard ground states `-phi'' + a phi - beta W[phi] phi = 0`.
//!
//! The discrete operator is the same staggered box scheme used by the scaled
//! system, so that the assembled limit state satisfies the scaled equations at
//! `eps = 0` up to rounding. With `chi~ = phi/r - phi'` on cell midpoints,
//! `-phi'' = chi~' + chi~/r` is collocated at the interior nodes.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{RadialField, RadialGrid, Tail};
use crate::newton::{damped_newton, AugmentedSystem, NewtonOptions};
use crate::potentials::potential_sweeps;
use crate::sparse::{smallest_singular_value, sup_norm, TripletMatrix};

/// Fermion mass `m` and charge `e` in the weak-coupling regime `e^2 < m^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    m: f64,
    e: f64,
}

impl ModelParams {
    pub fn new(m: f64, e: f64) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(invalid(format!(
                "mass must be positive and finite, got {m}"
            )));
        }
        if !e.is_finite() {
            return Err(invalid(format!("charge must be finite, got {e}")));
        }
        if e * e >= m * m {
            return Err(invalid(format!(
                "weak coupling e^2 < m^2 is required, got e = {e}, m = {m}"
            )));
        }
        Ok(Self { m, e })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn e(&self) -> f64 {
        self.e
    }

    /// Linear coefficient `2m` of the limit equation.
    pub fn a_coef(&self) -> f64 {
        2.0 * self.m
    }

    /// Nonlinear coefficient `16 pi (m^2 - e^2) m`.
    pub fn beta(&self) -> f64 {
        16.0 * PI * (self.m * self.m - self.e * self.e) * self.m
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub phi: RadialField,
    /// `phi'(0+)`.
    pub v_prime_origin: f64,
    /// `int phi^2`.
    pub l2_mass: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
    pub a_coef: f64,
    pub beta: f64,
}

impl GroundState {
    /// Slope of `ln phi` fitted over the outer quarter of the grid, stopping
    /// three decay lengths short of `R_max` where the Dirichlet row bends
    /// the profile.
    pub fn decay_rate(&self) -> f64 {
        let grid = self.phi.grid();
        let r_max = grid.r_max();
        let lo = 0.75 * r_max;
        let hi = r_max - 3.0 / self.a_coef.sqrt();
        let pts: Vec<(f64, f64)> = grid
            .nodes()
            .iter()
            .zip(self.phi.values())
            .filter(|(r, v)| **r >= lo && **r <= hi && **v > 0.0)
            .map(|(r, v)| (*r, v.ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateOptions {
    pub tol: f64,
    pub max_iters: usize,
    /// Width of the initial bump `c r exp(-r^2 a / (2 width^2))`.
    pub width: f64,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 50,
            width: 2.0,
        }
    }
}

/// Coefficients of `chi~_k = a_k v_{k-1} + b_k v_k` on cell `k`.
fn cell_coefficients(grid: &RadialGrid, k: usize) -> (f64, f64) {
    let (h, d) = (grid.spacing()[k], grid.dual_nodes()[k]);
    (0.5 / d + 1.0 / h, 0.5 / d - 1.0 / h)
}

/// Stencil of the discrete `-v''` at interior node `i`: coefficients of
/// `v_{i-1}`, `v_i`, `v_{i+1}` (the first is unused at `i = 0`).
pub(crate) fn laplacian_stencil(grid: &RadialGrid, i: usize) -> [f64; 3] {
    let (r, d) = (grid.nodes()[i], grid.dual_nodes());
    let gap = d[i + 1] - d[i];
    let cp = 1.0 / gap + 0.5 / r;
    let cm = -1.0 / gap + 0.5 / r;
    let (a_i, b_i) = cell_coefficients(grid, i);
    let (a_n, b_n) = cell_coefficients(grid, i + 1);
    [cm * a_i, cm * b_i + cp * a_n, cp * b_n]
}

fn apply_laplacian(grid: &RadialGrid, v: &[f64], i: usize) -> f64 {
    let s = laplacian_stencil(grid, i);
    let vm = if i == 0 { 0.0 } else { v[i - 1] };
    s[0] * vm + s[1] * v[i] + s[2] * v[i + 1]
}

fn boundary_scale(grid: &RadialGrid) -> f64 {
    let h = grid.spacing()[grid.len() - 1];
    1.0 / (h * h)
}

/// Residual of `-v'' + a v - beta W[v] v` at the interior nodes followed by the
/// scaled Dirichlet row at `R_max`.
pub fn choquard_residual(grid: &RadialGrid, v: &[f64], a: f64, beta: f64) -> Vec<f64> {
    let n = grid.len();
    let rho: Vec<f64> = v.iter().map(|x| x * x).collect();
    let (_, w) = potential_sweeps(grid, &rho);
    let mut out: Vec<f64> = (0..n - 1)
        .map(|i| apply_laplacian(grid, v, i) + a * v[i] - beta * w[i] * v[i])
        .collect();
    out.push(v[n - 1] * boundary_scale(grid));
    out
}

/// Newton system with auxiliary unknowns `Qf` (inner charge) and `P` (outer
/// integral of `v^2/r`); unknown layout `[v, Qf, P]`.
pub struct ChoquardSystem<'a> {
    pub grid: &'a RadialGrid,
    pub a: f64,
    pub beta: f64,
}

impl AugmentedSystem for ChoquardSystem<'_> {
    fn n_unknowns(&self) -> usize {
        self.grid.len()
    }

    fn residual(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(choquard_residual(self.grid, v, self.a, self.beta))
    }

    fn augmented_jacobian(&self, v: &[f64]) -> Result<TripletMatrix> {
        let g = self.grid;
        let n = g.len();
        let (r, w) = (g.nodes(), g.weights());
        let (iq, ip) = (n, 2 * n);
        let rho: Vec<f64> = v.iter().map(|x| x * x).collect();
        let (_, pot) = potential_sweeps(g, &rho);
        let mut m = TripletMatrix::new(3 * n);
        for i in 0..n - 1 {
            let s = laplacian_stencil(g, i);
            if i > 0 {
                m.push(i, i - 1, s[0]);
            }
            m.push(i, i, s[1] + self.a - self.beta * pot[i]);
            m.push(i, i + 1, s[2]);
            // W_i = Qf_i / r_i + P_i
            m.push(i, iq + i, -self.beta * v[i] / r[i]);
            m.push(i, ip + i, -self.beta * v[i]);
        }
        m.push(n - 1, n - 1, boundary_scale(g));
        for i in 0..n {
            // Qf_i - Qf_{i-1} - w_i v_i^2 = 0
            m.push(iq + i, iq + i, 1.0);
            if i > 0 {
                m.push(iq + i, iq + i - 1, -1.0);
            }
            m.push(iq + i, i, -2.0 * w[i] * v[i]);
            // P_i - P_{i+1} - w_{i+1} v_{i+1}^2 / r_{i+1} = 0, P_n = 0
            m.push(ip + i, ip + i, 1.0);
            if i + 1 < n {
                m.push(ip + i, ip + i + 1, -1.0);
                m.push(ip + i, i + 1, -2.0 * w[i + 1] * v[i + 1] / r[i + 1]);
            }
        }
        Ok(m)
    }
}

/// Linearization `h -> -h'' + a h - beta W[phi] h - 2 beta phi W_mixed[phi, h]`
/// applied to `h`, boundary row included.
pub fn linearization_apply(phi: &RadialField, a: f64, beta: f64, h: &[f64]) -> Result<Vec<f64>> {
    let g = phi.grid();
    let n = g.len();
    if h.len() != n {
        return Err(invalid("perturbation length does not match the grid"));
    }
    let v = phi.values();
    let rho: Vec<f64> = v.iter().map(|x| x * x).collect();
    let (_, w) = potential_sweeps(g, &rho);
    let mixed: Vec<f64> = v.iter().zip(h).map(|(p, q)| p * q).collect();
    let (_, wm) = potential_sweeps(g, &mixed);
    let mut out: Vec<f64> = (0..n - 1)
        .map(|i| {
            apply_laplacian(g, h, i) + a * h[i] - beta * w[i] * h[i] - 2.0 * beta * v[i] * wm[i]
        })
        .collect();
    out.push(h[n - 1] * boundary_scale(g));
    Ok(out)
}

fn count_sign_changes(v: &[f64]) -> usize {
    let scale = sup_norm(v);
    let mut last = 0.0_f64;
    let mut changes = 0;
    for &x in v {
        // Far-tail values at rounding level carry no sign information.
        if x.abs() <= 1e-14 * scale {
            continue;
        }
        if last != 0.0 && x.signum() != last.signum() {
            changes += 1;
        }
        last = x;
    }
    changes
}

/// Even extrapolation of `v/r` to the origin.
fn slope_at_origin(grid: &RadialGrid, v: &[f64]) -> f64 {
    let r = grid.nodes();
    let (c1, c2) = grid.even_extrapolation();
    c1 * v[0] / r[0] + c2 * v[1] / r[1]
}

fn finish(
    grid: &Arc<RadialGrid>,
    v: Vec<f64>,
    a: f64,
    beta: f64,
    iterations: usize,
    history: Vec<f64>,
) -> Result<GroundState> {
    let residual_norm = sup_norm(&choquard_residual(grid, &v, a, beta));
    let v_prime_origin = slope_at_origin(grid, &v);
    let rho: Vec<f64> = v.iter().map(|x| x * x).collect();
    let l2_mass = *grid.cumulative(&rho, 2).last().expect("non-empty grid");
    let phi = RadialField::new(grid.clone(), v, 1, Tail::Zero)?;
    Ok(GroundState {
        phi,
        v_prime_origin,
        l2_mass,
        residual_norm,
        iterations,
        history,
        a_coef: a,
        beta,
    })
}

/// Solves `-phi'' + a phi - beta W[phi] phi = 0` for the positive ground state
/// by damped Newton from a bump scaled onto the Nehari set.
pub fn solve_ground_state(
    grid: &Arc<RadialGrid>,
    a: f64,
    beta: f64,
    opts: &GroundStateOptions,
) -> Result<GroundState> {
    if !(a > 0.0 && beta > 0.0) {
        return Err(invalid(format!(
            "coefficients must be positive, got a = {a}, beta = {beta}"
        )));
    }
    if !(1e-12..=1e-6).contains(&opts.tol) {
        return Err(invalid(format!(
            "tolerance must lie in [1e-12, 1e-6], got {}",
            opts.tol
        )));
    }
    let s2 = opts.width * opts.width / a;
    let bump: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|r| r * (-r * r / (2.0 * s2)).exp())
        .collect();
    // Project the bump onto the Nehari set: pick c so that the quadratic part
    // <b, (-d^2 + a) b> balances c^2 beta <b, W[b] b>.
    let n = grid.len();
    let w = grid.weights();
    let lin = choquard_residual(grid, &bump, a, 0.0);
    let rho: Vec<f64> = bump.iter().map(|x| x * x).collect();
    let pot = potential_sweeps(grid, &rho).1;
    let num: f64 = (0..n - 1).map(|i| w[i] * bump[i] * lin[i]).sum();
    let den: f64 = (0..n).map(|i| w[i] * rho[i] * pot[i]).sum();
    if !(num > 0.0 && den > 0.0) {
        return Err(invalid("initial bump is not resolved by the grid"));
    }
    let c = (num / (beta * den)).sqrt();
    let guess: Vec<f64> = bump.iter().map(|x| c * x).collect();
    let sys = ChoquardSystem { grid, a, beta };
    let newton = NewtonOptions {
        tol: opts.tol,
        max_iters: opts.max_iters,
        damping: true,
        max_halvings: 30,
    };
    let rep = damped_newton(&sys, guess, &newton)?;
    let mut v = rep.x;
    let changes = count_sign_changes(&v[..v.len() - 1]);
    if changes > 0 {
        return Err(Error::WrongBranch {
            sign_changes: changes,
        });
    }
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    finish(grid, v, a, beta, rep.iterations, rep.history)
}

/// Ground state of the canonical problem `a = beta = 1`.
pub fn solve_canonical_ground_state(grid: &Arc<RadialGrid>, tol: f64) -> Result<GroundState> {
    solve_ground_state(
        grid,
        1.0,
        1.0,
        &GroundStateOptions {
            tol,
            ..Default::default()
        },
    )
}

/// Maps the canonical ground state to the coefficients of `params` through
/// `phi(r) = sqrt(a / beta) v(sqrt(a) r)`; the nodes are rescaled by
/// `1/sqrt(a)` so no interpolation is needed.
pub fn rescale_to_model(v: &GroundState, params: &ModelParams) -> Result<GroundState> {
    let (a, beta) = (params.a_coef(), params.beta());
    if !(beta > 0.0) {
        return Err(invalid("beta must be positive (weak coupling)"));
    }
    if v.a_coef != 1.0 || v.beta != 1.0 {
        return Err(invalid("rescaling expects the canonical ground state"));
    }
    let grid = v.phi.grid().rescaled(1.0 / a.sqrt())?;
    let amp = (a / beta).sqrt();
    let values: Vec<f64> = v.phi.values().iter().map(|x| amp * x).collect();
    finish(&grid, values, a, beta, v.iterations, v.history.clone())
}

/// Smallest singular value of the discrete radial linearization at `gs` with
/// the coefficients of `params`.
pub fn check_nondegeneracy(gs: &GroundState, params: &ModelParams) -> Result<f64> {
    let grid = gs.phi.grid();
    let sys = ChoquardSystem {
        grid,
        a: params.a_coef(),
        beta: params.beta(),
    };
    let lu = sys.augmented_jacobian(gs.phi.values())?.factor()?;
    smallest_singular_value(&lu, grid.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridSpec};

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -1.2).is_err());
        assert!(ModelParams::new(0.0, 0.0).is_err());
        let p = ModelParams::new(1.0, 0.6).unwrap();
        assert_eq!(p.a_coef(), 2.0);
        assert!((p.beta() - 16.0 * PI * 0.64).abs() < 1e-13);
    }

    #[test]
    fn laplacian_is_exact_on_odd_cubics() {
        // chi~ = v/r - v' vanishes for v = r, and v = r^3 gives -v'' = -6r
        // up to the midpoint errors of the staggered stencil.
        let g = build_grid(GridSpec::uniform(64, 2.0)).unwrap();
        let v: Vec<f64> = g.nodes().to_vec();
        for i in 0..63 {
            assert!(apply_laplacian(&g, &v, i).abs() < 1e-10);
        }
    }

    #[test]
    fn sign_changes_ignore_rounding_tail() {
        assert_eq!(count_sign_changes(&[1.0, 2.0, 1.0, 1e-18, -1e-19]), 0);
        assert_eq!(count_sign_changes(&[1.0, -2.0, 1.0]), 2);
    }
}
