//! Physical fields `(Phi1, Phi2, A, T, V)` recovered from a scaled state, the
//! original radial equations evaluated on them, and derived diagnostics.
//!
//! The evaluator in [`unscaled_residual`] works on the physical grid
//! `R = r / sqrt(eps)` with the same staggering as the scaled system (spinor
//! `Phi2` on cells, everything else on nodes) but shares no code with
//! [`crate::edm_system`]. It is the cross-check for the scaled equations.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::choquard::ModelParams;
use crate::edm_system::EdmSystem;
use crate::error::{invalid, Result};
use crate::grid::{RadialField, RadialGrid, Tail};
use crate::limit_state::ScaledState;

#[derive(Debug, Clone)]
pub struct PhysicalSolution {
    pub grid: Arc<RadialGrid>,
    pub eps: f64,
    pub omega: f64,
    pub params: ModelParams,
    pub phi1: RadialField,
    /// `Phi2` on the cell midpoints, where it is collocated.
    pub phi2_cells: Vec<f64>,
    /// `Phi2` interpolated to the nodes.
    pub phi2: RadialField,
    /// `a = A - 1`.
    pub a: RadialField,
    /// `t = T - 1`.
    pub t: RadialField,
    pub v: RadialField,
}

impl PhysicalSolution {
    /// Metric coefficient `A = 1 + a`.
    pub fn big_a(&self) -> Vec<f64> {
        self.a.values().iter().map(|x| 1.0 + x).collect()
    }

    /// Lapse `T = 1 + t`.
    pub fn big_t(&self) -> Vec<f64> {
        self.t.values().iter().map(|x| 1.0 + x).collect()
    }
}

/// Maps a scaled state at `eps > 0` to physical fields on `R = r / sqrt(eps)`.
pub fn reconstruct(state: &ScaledState, params: &ModelParams) -> Result<PhysicalSolution> {
    let eps = state.eps;
    if !(eps > 0.0) {
        return Err(invalid(
            "physical fields vanish at eps = 0; reconstruct needs eps > 0",
        ));
    }
    let grid = state.grid.rescaled(1.0 / eps.sqrt())?;
    let sys = EdmSystem::new(state.grid.clone(), *params, eps)?;
    let alpha = sys.alpha(state)?;
    let se = eps.sqrt();
    let phi1: Vec<f64> = state.phi.iter().map(|p| se * p).collect();
    let phi2_cells: Vec<f64> = state.chi.iter().map(|c| eps * c).collect();
    let phi2 = grid.dual_to_nodes(&phi2_cells);
    let a: Vec<f64> = alpha.nodes.iter().map(|x| eps * x).collect();
    let t: Vec<f64> = state.tau.iter().map(|x| eps * x).collect();
    let v: Vec<f64> = state.zeta.iter().map(|x| eps * x).collect();
    Ok(PhysicalSolution {
        phi1: RadialField::new(grid.clone(), phi1, 1, Tail::Zero)?,
        phi2: RadialField::new(grid.clone(), phi2, 2, Tail::Zero)?,
        phi2_cells,
        a: RadialField::new(grid.clone(), a, 0, Tail::Free)?,
        t: RadialField::new(grid.clone(), t, 0, Tail::Free)?,
        v: RadialField::new(grid.clone(), v, 0, Tail::Free)?,
        grid,
        eps,
        omega: params.m() - eps,
        params: *params,
    })
}

/// Residuals of the four radial equations, written with every term on one
/// side: the two spinor equations, the lapse equation multiplied through as
/// `2 R A t' - rhs`, and the Coulomb equation with its charge integral.
#[derive(Debug, Clone)]
pub struct PhysicalResidual {
    /// Cells `0..n`.
    pub dirac1: Vec<f64>,
    /// Nodes `0..n-1`.
    pub dirac2: Vec<f64>,
    /// Cells `1..n`.
    pub lapse: Vec<f64>,
    /// Cells `1..n`.
    pub coulomb: Vec<f64>,
}

impl PhysicalResidual {
    pub fn sup_norms(&self) -> [f64; 4] {
        let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        [
            sup(&self.dirac1),
            sup(&self.dirac2),
            sup(&self.lapse),
            sup(&self.coulomb),
        ]
    }

    /// Rows in the order of the scaled residual's equation blocks.
    pub fn components(&self) -> [&[f64]; 4] {
        [&self.dirac1, &self.dirac2, &self.lapse, &self.coulomb]
    }
}

fn running_trapezoid(h: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut total = 0.0;
    for i in 0..f.len() {
        let before = if i == 0 { 0.0 } else { f[i - 1] };
        total += 0.5 * h[i] * (before + f[i]);
        out.push(total);
    }
    out
}

/// Integral from the origin to the midpoint of cell `k`.
fn to_midpoint(h: &[f64], running: &[f64], f: &[f64], k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        running[k - 1] + 0.5 * h[k] * f[k - 1]
    }
}

/// Evaluates the radial equations on `phys`. `A` is rebuilt from the closed
/// form of `a(R)` on the physical fields, not taken from `phys.a`.
pub fn unscaled_residual(phys: &PhysicalSolution) -> Result<PhysicalResidual> {
    let g = &*phys.grid;
    let n = g.len();
    let (rr, hh, dd) = (g.nodes(), g.spacing(), g.dual_nodes());
    let (m, e, w) = (phys.params.m(), phys.params.e(), phys.omega);
    let (p1, p2) = (phys.phi1.values(), &phys.phi2_cells);
    let (t, v) = (phys.t.values(), phys.v.values());

    // Origin values of the even fields t and V.
    let (c1, c2) = g.even_extrapolation();
    let t_origin = c1 * t[0] + c2 * t[1];
    let v_origin = c1 * v[0] + c2 * v[1];
    let prev = |f: &[f64], f0: f64, k: usize| if k == 0 { f0 } else { f[k - 1] };

    // V' on cells, then carried to nodes.
    let dv: Vec<f64> = (0..n)
        .map(|k| (v[k] - prev(v, v_origin, k)) / hh[k])
        .collect();
    let at_node = |f: &[f64], i: usize| {
        let (k1, w1, k2, w2) = g.dual_to_node_stencil(i);
        w1 * f[k1] + w2 * f[k2]
    };
    let dv_node: Vec<f64> = (0..n).map(|i| at_node(&dv, i)).collect();
    let p2_node: Vec<f64> = (0..n).map(|i| at_node(p2, i)).collect();
    let spin2: Vec<f64> = (0..n)
        .map(|i| p1[i] * p1[i] + p2_node[i] * p2_node[i])
        .collect();

    // F(R) = int s (1+t)^2 V'^2, and the integral inside a(R).
    let f_int: Vec<f64> = (0..n)
        .map(|i| rr[i] * (1.0 + t[i]).powi(2) * dv_node[i].powi(2))
        .collect();
    let big_f = running_trapezoid(hh, &f_int);
    let a_int: Vec<f64> = (0..n)
        .map(|i| {
            let lt2 = (1.0 + t[i]).powi(2);
            let src = 16.0 * PI * (w - e * v[i]) * lt2 * spin2[i]
                + rr[i] * rr[i] * lt2 * dv_node[i].powi(2);
            src * big_f[i].exp()
        })
        .collect();
    let a_cum = running_trapezoid(hh, &a_int);
    // Deviations a = A - 1 on nodes and cells.
    let a_node: Vec<f64> = (0..n)
        .map(|i| -(-big_f[i]).exp() * a_cum[i] / rr[i])
        .collect();
    let a_cell: Vec<f64> = (0..n)
        .map(|k| {
            let fk = to_midpoint(hh, &big_f, &f_int, k);
            -(-fk).exp() * to_midpoint(hh, &a_cum, &a_int, k) / dd[k]
        })
        .collect();
    if let Some(i) = a_node.iter().chain(&a_cell).position(|x| !(*x > -1.0)) {
        return Err(invalid(format!("A is not positive (entry {i})")));
    }
    // Charge integrand of the Coulomb equation.
    let q_int: Vec<f64> = (0..n)
        .map(|i| spin2[i] * (1.0 + t[i]) / (1.0 + a_node[i]).sqrt())
        .collect();
    let q_cum = running_trapezoid(hh, &q_int);

    let mut dirac1 = Vec::with_capacity(n);
    for k in 0..n {
        let left = if k == 0 { 0.0 } else { p1[k - 1] };
        let p1c = 0.5 * (left + p1[k]);
        let tc = 0.5 * (prev(t, t_origin, k) + t[k]);
        let vc = 0.5 * (prev(v, v_origin, k) + v[k]);
        let dp1 = (p1[k] - left) / hh[k];
        dirac1.push(
            (1.0 + a_cell[k]).sqrt() * dp1 - p1c / dd[k] + ((w - e * vc) * (1.0 + tc) + m) * p2[k],
        );
    }
    let mut dirac2 = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let dp2 = (p2[i + 1] - p2[i]) / (dd[i + 1] - dd[i]);
        let p2c = 0.5 * (p2[i] + p2[i + 1]);
        dirac2.push(
            (1.0 + a_node[i]).sqrt() * dp2 - ((w - e * v[i]) * (1.0 + t[i]) - m) * p1[i]
                + p2c / rr[i],
        );
    }
    let mut lapse = Vec::with_capacity(n - 1);
    let mut coulomb = Vec::with_capacity(n - 1);
    for k in 1..n {
        let p1c = 0.5 * (p1[k - 1] + p1[k]);
        let tc = 0.5 * (t[k - 1] + t[k]);
        let vc = 0.5 * (v[k - 1] + v[k]);
        let lt = 1.0 + tc;
        let dt = (t[k] - t[k - 1]) / hh[k];
        let ac = 1.0 + a_cell[k];
        let s2 = p1c * p1c + p2[k] * p2[k];
        // 2R on the cell, in the form 2 R_{k-1} R_k / D_k.
        let two_r = 2.0 * rr[k - 1] * rr[k] / dd[k];
        let rhs = a_cell[k] * lt - 16.0 * PI * (w - e * vc) * lt.powi(3) * s2
            + 32.0 * PI / dd[k] * lt * lt * p1c * p2[k]
            + 16.0 * PI * m * lt * lt * (p1c * p1c - p2[k] * p2[k])
            + dd[k] * dd[k] * ac * lt.powi(3) * dv[k] * dv[k];
        lapse.push(two_r * ac * dt - rhs);
        let charge = to_midpoint(hh, &q_cum, &q_int, k);
        coulomb.push(ac.sqrt() * lt * dv[k] + 8.0 * PI * e / (rr[k - 1] * rr[k]) * charge);
    }
    Ok(PhysicalResidual {
        dirac1,
        dirac2,
        lapse,
        coulomb,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    /// Mean of `R (1 - A) / 2` over the outer tenth of the nodes.
    pub adm_mass: f64,
    /// `(max - min) / |mean|` of the same samples.
    pub adm_spread: f64,
    /// `int |Phi|^2 T / sqrt(A) dR`; compare with `1 / (4 pi)`.
    pub norm_integral: f64,
    pub sup_t: f64,
    pub min_a: f64,
    pub max_a: f64,
    /// `T(R_max) - 1` and `V(R_max)`.
    pub t_outer: f64,
    pub v_outer: f64,
    pub unscaled_residual_norms: [f64; 4],
}

pub fn diagnostics(phys: &PhysicalSolution) -> Result<Diagnostics> {
    let g = &*phys.grid;
    let n = g.len();
    let r = g.nodes();
    let (a, t, v) = (phys.a.values(), phys.t.values(), phys.v.values());
    let start = n - (n / 10).max(1);
    let samples: Vec<f64> = (start..n).map(|i| -0.5 * r[i] * a[i]).collect();
    let adm_mass = samples.iter().sum::<f64>() / samples.len() as f64;
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| {
            (l.min(*x), h.max(*x))
        });
    let adm_spread = if adm_mass == 0.0 {
        0.0
    } else {
        (hi - lo) / adm_mass.abs()
    };
    let (p1, p2) = (phys.phi1.values(), phys.phi2.values());
    let norm_integral = g
        .weights()
        .iter()
        .enumerate()
        .map(|(i, wi)| wi * (p1[i] * p1[i] + p2[i] * p2[i]) * (1.0 + t[i]) / (1.0 + a[i]).sqrt())
        .sum();
    Ok(Diagnostics {
        adm_mass,
        adm_spread,
        norm_integral,
        sup_t: t.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        min_a: 1.0 + a.iter().copied().fold(f64::INFINITY, f64::min),
        max_a: 1.0 + a.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        t_outer: t[n - 1],
        v_outer: v[n - 1],
        unscaled_residual_norms: unscaled_residual(phys)?.sup_norms(),
    })
}
