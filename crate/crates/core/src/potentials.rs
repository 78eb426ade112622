//! Cumulative charge and the Newtonian kernel `int_0^inf f(s) / max(r, s) ds`.

use crate::error::{invalid, Result};
use crate::grid::{RadialField, RadialGrid, Tail};

#[derive(Debug, Clone, PartialEq)]
pub struct ChargeProfile {
    /// `Q(r) = int_0^r phi^2`.
    pub charge: RadialField,
    /// `Q(R_max)`.
    pub total: f64,
}

fn require_vanishing(phi: &RadialField) -> Result<()> {
    if phi.origin_power() == 0 {
        return Err(invalid(
            "field must vanish at the origin (origin_power >= 1)",
        ));
    }
    Ok(())
}

pub fn cumulative_charge(phi: &RadialField) -> Result<ChargeProfile> {
    require_vanishing(phi)?;
    let grid = phi.grid();
    let rho: Vec<f64> = phi.values().iter().map(|v| v * v).collect();
    let q = grid.cumulative(&rho, 2 * phi.origin_power());
    let total = q[q.len() - 1];
    let charge = RadialField::new(grid.clone(), q, 2 * phi.origin_power() + 1, Tail::Free)?;
    Ok(ChargeProfile { charge, total })
}

/// Two sweeps for a density `rho` vanishing at the origin: the full-weight
/// partial sums `Qf_i = sum_{j<=i} w_j rho_j` and the kernel values
/// `W_i = Qf_i / r_i + sum_{j>i} w_j rho_j / r_j`, which equal
/// `sum_j w_j rho_j / max(r_i, r_j)`.
pub fn potential_sweeps(grid: &RadialGrid, rho: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (r, w) = (grid.nodes(), grid.weights());
    let n = rho.len();
    let mut qf = Vec::with_capacity(n);
    let mut acc = 0.0;
    for j in 0..n {
        acc += w[j] * rho[j];
        qf.push(acc);
    }
    let mut pot = vec![0.0; n];
    let mut outer = 0.0;
    for i in (0..n).rev() {
        pot[i] = qf[i] / r[i] + outer;
        outer += w[i] * rho[i] / r[i];
    }
    (qf, pot)
}

/// `W[phi](r) = int_0^{R_max} phi(s)^2 / max(r, s) ds`.
pub fn newtonian_potential(phi: &RadialField) -> Result<RadialField> {
    require_vanishing(phi)?;
    let rho: Vec<f64> = phi.values().iter().map(|v| v * v).collect();
    let (_, w) = potential_sweeps(phi.grid(), &rho);
    RadialField::new(phi.grid().clone(), w, 0, Tail::Free)
}

/// `int_0^{R_max} phi0(s) h(s) / max(r, s) ds`, the kernel's linearization.
pub fn mixed_potential(phi0: &RadialField, h: &[f64]) -> Result<Vec<f64>> {
    require_vanishing(phi0)?;
    if h.len() != phi0.values().len() {
        return Err(invalid("perturbation length does not match the grid"));
    }
    let rho: Vec<f64> = phi0.values().iter().zip(h).map(|(a, b)| a * b).collect();
    Ok(potential_sweeps(phi0.grid(), &rho).1)
}
