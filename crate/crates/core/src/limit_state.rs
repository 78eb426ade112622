//! The scaled unknown `(phi, chi, tau, zeta)` and its `eps = 0` member built
//! from a Choquard ground state.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::choquard::{GroundState, ModelParams};
use crate::error::{invalid, Result};
use crate::grid::{RadialField, RadialGrid, Tail};
use crate::potentials::newtonian_potential;

/// State of the scaled system at parameter `eps`.
///
/// `phi`, `tau` and `zeta` are sampled at the grid nodes; `chi` lives on the
/// cell midpoints (`grid.dual_nodes()`), which is where the first equation of
/// the box scheme is collocated.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledState {
    pub grid: Arc<RadialGrid>,
    pub eps: f64,
    pub phi: Vec<f64>,
    pub chi: Vec<f64>,
    pub tau: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl ScaledState {
    pub fn new(
        grid: Arc<RadialGrid>,
        eps: f64,
        phi: Vec<f64>,
        chi: Vec<f64>,
        tau: Vec<f64>,
        zeta: Vec<f64>,
    ) -> Result<Self> {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(invalid(format!(
                "eps must be finite and non-negative, got {eps}"
            )));
        }
        let n = grid.len();
        for (name, f) in [("phi", &phi), ("chi", &chi), ("tau", &tau), ("zeta", &zeta)] {
            if f.len() != n {
                return Err(invalid(format!(
                    "{name} has {} values, grid has {n}",
                    f.len()
                )));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("{name} has non-finite values")));
            }
        }
        Ok(Self {
            grid,
            eps,
            phi,
            chi,
            tau,
            zeta,
        })
    }

    pub fn zeros(grid: Arc<RadialGrid>, eps: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(
            grid,
            eps,
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
        )
    }

    /// Stacked `[phi, chi, tau, zeta]`.
    pub fn to_vector(&self) -> Vec<f64> {
        [&self.phi, &self.chi, &self.tau, &self.zeta]
            .into_iter()
            .flatten()
            .copied()
            .collect()
    }

    pub fn from_vector(grid: Arc<RadialGrid>, eps: f64, x: &[f64]) -> Result<Self> {
        let n = grid.len();
        if x.len() != 4 * n {
            return Err(invalid(format!(
                "state vector has {} entries, expected {}",
                x.len(),
                4 * n
            )));
        }
        let part = |k: usize| x[k * n..(k + 1) * n].to_vec();
        Self::new(grid, eps, part(0), part(1), part(2), part(3))
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        Self {
            eps,
            ..self.clone()
        }
    }

    pub fn phi_field(&self) -> Result<RadialField> {
        RadialField::new(self.grid.clone(), self.phi.clone(), 1, Tail::Zero)
    }

    /// `chi` interpolated from the midpoints to the nodes.
    pub fn chi_field(&self) -> Result<RadialField> {
        RadialField::new(
            self.grid.clone(),
            self.grid.dual_to_nodes(&self.chi),
            2,
            Tail::Zero,
        )
    }

    pub fn tau_field(&self) -> Result<RadialField> {
        RadialField::new(self.grid.clone(), self.tau.clone(), 0, Tail::Zero)
    }

    pub fn zeta_field(&self) -> Result<RadialField> {
        RadialField::new(self.grid.clone(), self.zeta.clone(), 0, Tail::Zero)
    }

    /// Sup-norm distance over all four fields.
    pub fn sup_distance(&self, other: &ScaledState) -> f64 {
        self.to_vector()
            .iter()
            .zip(other.to_vector())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// `chi = (phi/r - phi') / (2m)` evaluated on the cell midpoints with the box
/// averages and differences of `phi`.
pub fn limit_chi(grid: &RadialGrid, phi: &[f64], m: f64) -> Vec<f64> {
    let avg = grid.midpoint_average(phi, 1);
    let diff = grid.midpoint_derivative(phi, 1);
    avg.iter()
        .zip(&diff)
        .zip(grid.dual_nodes())
        .map(|((a, d), x)| (a / x - d) / (2.0 * m))
        .collect()
}

/// Builds the `eps = 0` state from the ground state of the limit equation
/// with coefficients `2m` and `16 pi (m^2 - e^2) m`.
pub fn assemble_limit_state(gs: &GroundState, params: &ModelParams) -> Result<ScaledState> {
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * y.abs();
    if !close(gs.a_coef, params.a_coef()) || !close(gs.beta, params.beta()) {
        return Err(invalid(
            "ground state coefficients do not match the model; rescale it first",
        ));
    }
    let grid = gs.phi.grid().clone();
    let phi = gs.phi.values().to_vec();
    let chi = limit_chi(&grid, &phi, params.m());
    let w = newtonian_potential(&gs.phi)?;
    let tau = w
        .values()
        .iter()
        .map(|x| 8.0 * PI * params.m() * x)
        .collect();
    let zeta = w
        .values()
        .iter()
        .map(|x| 8.0 * PI * params.e() * x)
        .collect();
    ScaledState::new(grid, 0.0, phi, chi, tau, zeta)
}

/// Everything produced on the way to the `eps = 0` state.
#[derive(Debug, Clone)]
pub struct LimitSolution {
    /// Ground state of the canonical problem (`a = beta = 1`).
    pub canonical: GroundState,
    /// The same ground state rescaled to the model's coefficients.
    pub ground_state: GroundState,
    pub state: ScaledState,
}

/// Solves the canonical problem on `canonical_spec`, rescales it to `params`
/// (the grid shrinks by `1/sqrt(2m)`) and assembles the limit state.
pub fn solve_limit(
    canonical_spec: crate::grid::GridSpec,
    params: &ModelParams,
    tol: f64,
) -> Result<LimitSolution> {
    let grid = crate::grid::build_grid(canonical_spec)?;
    let canonical = crate::choquard::solve_canonical_ground_state(&grid, tol)?;
    let ground_state = crate::choquard::rescale_to_model(&canonical, params)?;
    let state = assemble_limit_state(&ground_state, params)?;
    Ok(LimitSolution {
        canonical,
        ground_state,
        state,
    })
}
