//! Residual and Jacobian of the rescaled Einstein-Dirac-Maxwell system.
//!
//! In the scaled variables the four equations read
//!
//! ```text
//! sqrt(1+eps a) phi' - phi/r + 2m chi + K1                        = 0
//! sqrt(1+eps a) chi' + chi/r + phi - m phi tau + e phi zeta + K2  = 0
//! (1+eps a) tau' - a/(2r) + K3                                    = 0
//! sqrt(1+eps a)(1+eps tau) zeta' + (8 pi e/r^2) int phi^2 + K4    = 0
//! ```
//!
//! with `a = alpha(eps, state)` the rescaled metric function and `K_i` the
//! remainders, each carrying an explicit factor `eps`. See
//! `docs/derivation.md` for the closed forms.
//!
//! Discretization (box scheme): `phi`, `tau`, `zeta` live on the nodes, `chi`
//! on the cell midpoints. Equations one, three and four are collocated on the
//! cells and equation two on the interior nodes. The `phi` block is closed by
//! `phi(R_max) = 0`; `tau` and `zeta` decay like `1/r`, so their blocks are
//! closed by the vacuum condition `(r f)' = 0` on the last cell. Running integrals use the
//! trapezoid rule on the nodes; their value at a cell midpoint is the value at
//! the left node plus half a cell of the left integrand. With this choice the
//! `eps = 0` equations are satisfied to rounding by the assembled limit state.
//!
//! The running integrals are also exposed as auxiliary unknowns with local
//! recurrences so that the Jacobian stays sparse.

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::choquard::ModelParams;
use crate::error::{invalid, Error, Result};
use crate::grid::{RadialField, RadialGrid, Tail};
use crate::limit_state::ScaledState;
use crate::newton::AugmentedSystem;
use crate::real::{Dual, Real, Sparse};
use crate::sparse::{smallest_singular_value, sup_norm, SparseLu, TripletMatrix};

/// Powers of `eps` relating the physical residuals to the scaled ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingExponents {
    pub p: [f64; 4],
}

pub const SCALING_EXPONENTS: ScalingExponents = ScalingExponents {
    p: [1.0, 1.5, 1.0, 1.5],
};

/// Deliberate sign error in one remainder, used to check that the
/// verification suite notices derivation mistakes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mutation {
    K1,
    K2,
    K3,
    K4,
}

impl FromStr for Mutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "k1" => Ok(Self::K1),
            "k2" => Ok(Self::K2),
            "k3" => Ok(Self::K3),
            "k4" => Ok(Self::K4),
            other => Err(invalid(format!(
                "unknown mutation '{other}', expected k1..k4"
            ))),
        }
    }
}

/// Residuals of the four scaled equations.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    grid: Arc<RadialGrid>,
    /// Equation one on all cells.
    pub r1: Vec<f64>,
    /// Equation two on nodes `0..n-1`.
    pub r2: Vec<f64>,
    /// Equation three on cells `1..n`.
    pub r3: Vec<f64>,
    /// Equation four on cells `1..n`.
    pub r4: Vec<f64>,
    /// Closing rows at `R_max` for `phi`, `tau`, `zeta`.
    pub boundary: [f64; 3],
}

impl Residual {
    fn from_vector(grid: Arc<RadialGrid>, v: &[f64]) -> Self {
        let n = grid.len();
        Self {
            r1: v[..n].to_vec(),
            r2: v[n..2 * n - 1].to_vec(),
            r3: v[2 * n..3 * n - 1].to_vec(),
            r4: v[3 * n..4 * n - 1].to_vec(),
            boundary: [v[2 * n - 1], v[3 * n - 1], v[4 * n - 1]],
            grid,
        }
    }

    /// Positions at which each component is collocated.
    pub fn locations(&self) -> [&[f64]; 4] {
        let (r, d) = (self.grid.nodes(), self.grid.dual_nodes());
        let n = r.len();
        [d, &r[..n - 1], &d[1..], &d[1..]]
    }

    pub fn components(&self) -> [&[f64]; 4] {
        [&self.r1, &self.r2, &self.r3, &self.r4]
    }

    pub fn sup_norms(&self) -> [f64; 4] {
        self.components().map(sup_norm)
    }

    /// `(sum h r R^2)^{1/2}` per equation, the discrete `L^2(r dr)` norm.
    pub fn weighted_l2_norms(&self) -> [f64; 4] {
        let h = self.grid.spacing();
        let loc = self.locations();
        let comp = self.components();
        let offs = [0, 0, 1, 1];
        std::array::from_fn(|q| {
            comp[q]
                .iter()
                .zip(loc[q])
                .enumerate()
                .map(|(j, (v, x))| h[j + offs[q]] * x * v * v)
                .sum::<f64>()
                .sqrt()
        })
    }

    /// Largest sup-norm over the four equations and the boundary rows.
    pub fn max_norm(&self) -> f64 {
        self.sup_norms()
            .into_iter()
            .chain(self.boundary.map(f64::abs))
            .fold(0.0, f64::max)
    }
}

/// Rescaled metric function on the nodes and on the cell midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaProfile {
    pub nodes: Vec<f64>,
    pub cells: Vec<f64>,
}

/// Evaluates residuals of the scaled system at a fixed `eps`.
#[derive(Debug, Clone)]
pub struct EdmSystem {
    grid: Arc<RadialGrid>,
    params: ModelParams,
    eps: f64,
    mutation: Option<Mutation>,
}

struct Evaluation<T> {
    rows: Vec<T>,
    aux_rows: Vec<T>,
    alpha_nodes: Vec<T>,
    alpha_cells: Vec<T>,
    integrals: Vec<T>,
}

fn trapezoid<T: Real>(h: &[f64], f: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = T::cst(0.0);
    let mut prev = T::cst(0.0);
    for (fi, hi) in f.iter().zip(h) {
        acc = acc + (prev + *fi) * (0.5 * hi);
        out.push(acc);
        prev = *fi;
    }
    out
}

/// Running integral at the midpoint of cell `k`: left node value plus half a
/// cell of the left integrand.
fn at_cell<T: Real>(h: &[f64], cum: &[T], f: &[T], k: usize) -> T {
    if k == 0 {
        T::cst(0.0)
    } else {
        cum[k - 1] + f[k - 1] * (0.5 * h[k])
    }
}

impl EdmSystem {
    pub fn new(grid: Arc<RadialGrid>, params: ModelParams, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(invalid(format!(
                "eps must be finite and non-negative, got {eps}"
            )));
        }
        Ok(Self {
            grid,
            params,
            eps,
            mutation: None,
        })
    }

    pub fn with_mutation(mut self, mutation: Option<Mutation>) -> Self {
        self.mutation = mutation;
        self
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    fn check_state(&self, state: &ScaledState) -> Result<()> {
        if state.grid.spec() != self.grid.spec() {
            return Err(invalid("state lives on a different grid"));
        }
        Ok(())
    }

    fn sign(&self, which: Mutation) -> f64 {
        if self.mutation == Some(which) {
            -1.0
        } else {
            1.0
        }
    }

    fn metric<T: Real>(&self, alpha: T, at: f64) -> Result<T> {
        let g = alpha * self.eps + 1.0;
        if !(g.val() > 0.0) {
            return Err(Error::MetricBreakdown {
                r: at,
                value: g.val(),
            });
        }
        Ok(g)
    }

    /// Core evaluation. `x` is the stacked state; with `aux = Some(..)` the
    /// running integrals `[G, I, E, Q]` are taken as given and their
    /// recurrence rows are returned as well.
    fn evaluate<T: Real>(&self, x: &[T], aux: Option<&[T]>) -> Result<Evaluation<T>> {
        let g = &*self.grid;
        let n = g.len();
        let (r, h, d) = (g.nodes(), g.spacing(), g.dual_nodes());
        let eps = self.eps;
        let (m, e) = (self.params.m(), self.params.e());
        let (phi, chi, tau, zeta) = (&x[..n], &x[n..2 * n], &x[2 * n..3 * n], &x[3 * n..]);

        let (c1, c2) = g.even_extrapolation();
        let tau_o = tau[0] * c1 + tau[1] * c2;
        let zeta_o = zeta[0] * c1 + zeta[1] * c2;
        let left = |f: &[T], origin: T, k: usize| if k == 0 { origin } else { f[k - 1] };
        let zero = T::cst(0.0);

        let dzeta: Vec<T> = (0..n)
            .map(|k| (zeta[k] - left(zeta, zeta_o, k)) / h[k])
            .collect();
        let to_node = |f: &[T], i: usize| {
            let (k1, w1, k2, w2) = g.dual_to_node_stencil(i);
            f[k1] * w1 + f[k2] * w2
        };
        let chi_n: Vec<T> = (0..n).map(|i| to_node(chi, i)).collect();
        let dzeta_n: Vec<T> = (0..n).map(|i| to_node(&dzeta, i)).collect();
        let lapse: Vec<T> = tau.iter().map(|t| *t * eps + 1.0).collect();
        let dens: Vec<T> = (0..n).map(|i| phi[i].sq() + chi_n[i].sq() * eps).collect();

        // G' = r (1 + eps tau)^2 zeta'^2
        let gi: Vec<T> = (0..n)
            .map(|i| lapse[i].sq() * dzeta_n[i].sq() * r[i])
            .collect();
        let (cum_g, cum_i_given, cum_e_given, cum_q_given) = match aux {
            Some(a) => (
                a[..n].to_vec(),
                Some(&a[n..2 * n]),
                Some(&a[2 * n..3 * n]),
                Some(&a[3 * n..]),
            ),
            None => (trapezoid(h, &gi), None, None, None),
        };
        let e2 = eps * eps;
        // I' = [16 pi (m - eps(1 + e zeta))(1 + eps tau)^2 dens + eps r^2 (1 + eps tau)^2 zeta'^2] exp(eps^2 G)
        let fi: Vec<T> = (0..n)
            .map(|i| {
                let coupling = (zeta[i] * e + 1.0) * (-eps) + m;
                let matter = coupling * lapse[i].sq() * dens[i] * (16.0 * PI);
                let stress = lapse[i].sq() * dzeta_n[i].sq() * (eps * r[i] * r[i]);
                (matter + stress) * (cum_g[i] * e2).exp()
            })
            .collect();
        let cum_i = match cum_i_given {
            Some(v) => v.to_vec(),
            None => trapezoid(h, &fi),
        };
        let alpha_n: Vec<T> = (0..n)
            .map(|i| -(cum_g[i] * (-e2)).exp() * cum_i[i] / r[i])
            .collect();
        let mut root_n = Vec::with_capacity(n);
        for i in 0..n {
            root_n.push(self.metric(alpha_n[i], r[i])?.sqrt());
        }
        // E' = dens (1 + eps tau) / sqrt(1 + eps alpha) - phi^2
        let ci: Vec<T> = (0..n)
            .map(|i| dens[i] * lapse[i] / root_n[i] - phi[i].sq())
            .collect();
        let qi: Vec<T> = phi.iter().map(|p| p.sq()).collect();
        let cum_e = match cum_e_given {
            Some(v) => v.to_vec(),
            None => trapezoid(h, &ci),
        };
        let cum_q = match cum_q_given {
            Some(v) => v.to_vec(),
            None => trapezoid(h, &qi),
        };

        let alpha_c: Vec<T> = (0..n)
            .map(|k| {
                let gk = at_cell(h, &cum_g, &gi, k);
                let ik = at_cell(h, &cum_i, &fi, k);
                -(gk * (-e2)).exp() * ik / d[k]
            })
            .collect();

        let mut rows = Vec::with_capacity(4 * n);
        let (s1, s2, s3, s4) = (
            self.sign(Mutation::K1),
            self.sign(Mutation::K2),
            self.sign(Mutation::K3),
            self.sign(Mutation::K4),
        );

        // Equation one on cells.
        for k in 0..n {
            let pm = left(phi, zero, k);
            let pbar = (pm + phi[k]) * 0.5;
            let dphi = (phi[k] - pm) / h[k];
            let tbar = (left(tau, tau_o, k) + tau[k]) * 0.5;
            let zbar = (left(zeta, zeta_o, k) + zeta[k]) * 0.5;
            let root = self.metric(alpha_c[k], d[k])?.sqrt();
            let zc = zbar * e + 1.0;
            let k1 = chi[k] * ((tbar * m - zc) - tbar * zc * eps) * eps;
            rows.push(root * dphi - pbar / d[k] + chi[k] * (2.0 * m) + k1 * s1);
        }
        // Equation two on interior nodes.
        for i in 0..n - 1 {
            let gap = d[i + 1] - d[i];
            let dchi = (chi[i + 1] - chi[i]) / gap;
            let cbar = (chi[i] + chi[i + 1]) * 0.5;
            let k2 = tau[i] * (zeta[i] * e + 1.0) * phi[i] * eps;
            rows.push(
                root_n[i] * dchi + cbar / r[i] + phi[i] - phi[i] * tau[i] * m
                    + phi[i] * zeta[i] * e
                    + k2 * s2,
            );
        }
        rows.push(phi[n - 1] / h[n - 1]);
        // Equation three on cells 1..n; 1/(2r) is discretized as
        // d/(2 r_{k-1} r_k) so that the eps = 0 rows are exact.
        for k in 1..n {
            let sk = d[k] / (2.0 * r[k - 1] * r[k]);
            let (pbar, tbar) = ((phi[k - 1] + phi[k]) * 0.5, (tau[k - 1] + tau[k]) * 0.5);
            let zbar = (zeta[k - 1] + zeta[k]) * 0.5;
            let (dtau, dz) = ((tau[k] - tau[k - 1]) / h[k], dzeta[k]);
            let ga = self.metric(alpha_c[k], d[k])?;
            let lt = tbar * eps + 1.0;
            let ch2 = chi[k].sq();
            let bracket = -alpha_c[k] * tbar
                + lt.sq() * (tbar * pbar.sq() + ch2 * (tbar * eps + 2.0)) * (16.0 * PI * m)
                - (zbar * e + 1.0) * lt.sq() * lt * (pbar.sq() + ch2 * eps) * (16.0 * PI)
                - lt.sq() * pbar * chi[k] * (32.0 * PI / d[k])
                - ga * lt.sq() * lt * dz.sq() * (d[k] * d[k]);
            let k3 = bracket * (eps * sk);
            rows.push(ga * dtau - alpha_c[k] * sk + k3 * s3);
        }
        // Beyond R_max the potentials continue as C/r, so tau(R) = -R tau'(R)
        // with tau'(R) taken from equation three at the last node. Weighted
        // by 1/h like the phi row.
        {
            let i = n - 1;
            let lt = tau[i] * eps + 1.0;
            let ch2 = chi_n[i].sq();
            let bracket = -alpha_n[i] * tau[i]
                + lt.sq() * (tau[i] * phi[i].sq() + ch2 * (tau[i] * eps + 2.0)) * (16.0 * PI * m)
                - (zeta[i] * e + 1.0) * lt.sq() * lt * (phi[i].sq() + ch2 * eps) * (16.0 * PI)
                - lt.sq() * phi[i] * chi_n[i] * (32.0 * PI / r[i])
                - (alpha_n[i] * eps + 1.0) * lt.sq() * lt * dzeta_n[i].sq() * (r[i] * r[i]);
            let row =
                (alpha_n[i] * eps + 1.0) * tau[i] + alpha_n[i] * 0.5 - bracket * (0.5 * eps * s3);
            rows.push(row / h[i]);
        }
        // Equation four on cells 1..n.
        for k in 1..n {
            let coef = 8.0 * PI * e / (r[k - 1] * r[k]);
            let tbar = (tau[k - 1] + tau[k]) * 0.5;
            let root = self.metric(alpha_c[k], d[k])?.sqrt();
            let qk = at_cell(h, &cum_q, &qi, k);
            let k4 = at_cell(h, &cum_e, &ci, k) * coef;
            rows.push(root * (tbar * eps + 1.0) * dzeta[k] + qk * coef + k4 * s4);
        }
        // zeta(R) = -R zeta'(R) from equation four at the last node.
        {
            let i = n - 1;
            let charge = cum_q[i] + cum_e[i] * s4;
            let row = root_n[i] * lapse[i] * zeta[i] - charge * (8.0 * PI * e / r[i]);
            rows.push(row / h[i]);
        }

        let aux_rows = match aux {
            None => Vec::new(),
            Some(_) => {
                let mut out = Vec::with_capacity(4 * n);
                for (cum, f) in [(&cum_g, &gi), (&cum_i, &fi), (&cum_e, &ci), (&cum_q, &qi)] {
                    for i in 0..n {
                        let (cp, fp) = if i == 0 {
                            (zero, zero)
                        } else {
                            (cum[i - 1], f[i - 1])
                        };
                        out.push(cum[i] - cp - (fp + f[i]) * (0.5 * h[i]));
                    }
                }
                out
            }
        };
        let integrals = match aux {
            None => [cum_g, cum_i, cum_e, cum_q].concat(),
            Some(_) => Vec::new(),
        };
        Ok(Evaluation {
            rows,
            aux_rows,
            alpha_nodes: alpha_n,
            alpha_cells: alpha_c,
            integrals,
        })
    }

    /// Stacked residual `[eq1, eq2, phi(R), eq3, tau(R), eq4, zeta(R)]`.
    pub fn residual_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != 4 * self.grid.len() {
            return Err(invalid("state vector length does not match the grid"));
        }
        Ok(self.evaluate(x, None)?.rows)
    }

    pub fn residual(&self, state: &ScaledState) -> Result<Residual> {
        self.check_state(state)?;
        let v = self.residual_vector(&state.to_vector())?;
        Ok(Residual::from_vector(self.grid.clone(), &v))
    }

    pub fn alpha(&self, state: &ScaledState) -> Result<AlphaProfile> {
        self.check_state(state)?;
        let ev = self.evaluate(&state.to_vector(), None)?;
        Ok(AlphaProfile {
            nodes: ev.alpha_nodes,
            cells: ev.alpha_cells,
        })
    }

    /// Running integrals `[G, I, E, Q]` at the nodes for state vector `x`.
    fn auxiliaries(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.evaluate(x, None)?.integrals)
    }

    /// Directional derivative `J d` of the residual at `x`.
    pub fn jacobian_apply(&self, x: &[f64], dir: &[f64]) -> Result<Vec<f64>> {
        if x.len() != dir.len() || x.len() != 4 * self.grid.len() {
            return Err(invalid("state and direction lengths do not match the grid"));
        }
        let xd: Vec<Dual> = x.iter().zip(dir).map(|(a, b)| Dual::new(*a, *b)).collect();
        Ok(self
            .evaluate(&xd, None)?
            .rows
            .into_iter()
            .map(|v| v.d)
            .collect())
    }

    pub fn jacobian(&self, state: &ScaledState) -> Result<Jacobian> {
        self.check_state(state)?;
        let x = state.to_vector();
        let matrix = self.augmented_jacobian(&x)?;
        Ok(Jacobian {
            matrix,
            n_primary: x.len(),
            system: self.clone(),
            x,
        })
    }
}

impl AugmentedSystem for EdmSystem {
    fn n_unknowns(&self) -> usize {
        4 * self.grid.len()
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.residual_vector(x)
    }

    fn augmented_jacobian(&self, x: &[f64]) -> Result<TripletMatrix> {
        let np = x.len();
        let aux = self.auxiliaries(x)?;
        let xs: Vec<Sparse> = x
            .iter()
            .enumerate()
            .map(|(i, v)| Sparse::variable(*v, i))
            .collect();
        let auxs: Vec<Sparse> = aux
            .iter()
            .enumerate()
            .map(|(i, v)| Sparse::variable(*v, np + i))
            .collect();
        let ev = self.evaluate(&xs, Some(&auxs))?;
        let mut m = TripletMatrix::new(2 * np);
        for (row, v) in ev.rows.iter().chain(&ev.aux_rows).enumerate() {
            for (col, g) in v.gradient() {
                if g != 0.0 {
                    m.push(row, col, g);
                }
            }
        }
        Ok(m)
    }
}

/// Jacobian of the scaled residual at a state, held in augmented form.
pub struct Jacobian {
    matrix: TripletMatrix,
    n_primary: usize,
    system: EdmSystem,
    x: Vec<f64>,
}

impl Jacobian {
    pub fn n(&self) -> usize {
        self.n_primary
    }

    pub fn augmented(&self) -> &TripletMatrix {
        &self.matrix
    }

    pub fn factor(&self) -> Result<SparseLu> {
        self.matrix.factor()
    }

    /// `J d`, computed by forward differentiation of the residual.
    pub fn apply(&self, dir: &[f64]) -> Result<Vec<f64>> {
        self.system.jacobian_apply(&self.x, dir)
    }

    /// `J d` from the assembled matrix.
    pub fn apply_assembled(&self, dir: &[f64]) -> Result<Vec<f64>> {
        self.matrix.reduced_matvec(self.n_primary, dir)
    }

    /// Dense reduced Jacobian: the Schur complement of the assembled
    /// augmented matrix onto the state unknowns. Intended for small grids.
    pub fn to_dense(&self) -> Result<Vec<Vec<f64>>> {
        let np = self.n_primary;
        let mut a11 = vec![vec![0.0; np]; np];
        let mut a12: Vec<Vec<(usize, f64)>> = vec![Vec::new(); np];
        let mut a21: Vec<Vec<(usize, f64)>> = vec![Vec::new(); np];
        let mut a22 = TripletMatrix::new(self.matrix.dim() - np);
        for (r, c, v) in self.matrix.entries() {
            match (r < np, c < np) {
                (true, true) => a11[r][c] += v,
                (true, false) => a12[r].push((c - np, v)),
                (false, true) => a21[c].push((r - np, v)),
                (false, false) => a22.push(r - np, c - np, v),
            }
        }
        let lu = a22.factor()?;
        let mut rhs = vec![0.0; a22.dim()];
        for j in 0..np {
            if a21[j].is_empty() {
                continue;
            }
            rhs.iter_mut().for_each(|x| *x = 0.0);
            for &(i, v) in &a21[j] {
                rhs[i] += v;
            }
            let y = lu.solve(&rhs)?;
            for (i, row) in a12.iter().enumerate() {
                let s: f64 = row.iter().map(|&(k, v)| v * y[k]).sum();
                a11[i][j] -= s;
            }
        }
        Ok(a11)
    }

    pub fn smallest_singular_value(&self) -> Result<f64> {
        smallest_singular_value(&self.factor()?, self.n_primary)
    }
}

/// Rescaled metric function `alpha` at the nodes.
pub fn alpha(eps: f64, state: &ScaledState, params: &ModelParams) -> Result<RadialField> {
    let sys = EdmSystem::new(state.grid.clone(), *params, eps)?;
    let a = sys.alpha(state)?;
    RadialField::new(state.grid.clone(), a.nodes, 1, Tail::Free)
}

pub fn scaled_residual(eps: f64, state: &ScaledState, params: &ModelParams) -> Result<Residual> {
    EdmSystem::new(state.grid.clone(), *params, eps)?.residual(state)
}

pub fn jacobian(eps: f64, state: &ScaledState, params: &ModelParams) -> Result<Jacobian> {
    EdmSystem::new(state.grid.clone(), *params, eps)?.jacobian(state)
}
