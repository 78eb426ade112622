//! Radial grids on `(0, R_max]` and fields sampled on them.
//!
//! Nodes `r_1 < ... < r_n = R_max` are stored zero-based; the origin is never a
//! node. Cell `k` spans `[r_{k-1}, r_k]` (with `r_0 = 0`) and has midpoint
//! `d_k`. Quadrature is the composite trapezoid rule, with the value at the
//! origin taken from the field's origin power: zero when the field vanishes
//! there, otherwise an even extrapolation from the first two nodes.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grading {
    Uniform,
    Geometric,
}

/// Descriptor from which a grid is rebuilt exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub r_max: f64,
    pub grading: Grading,
    /// Ratio of consecutive spacings; ignored for uniform grids.
    pub q: f64,
}

impl GridSpec {
    pub fn uniform(n: usize, r_max: f64) -> Self {
        Self {
            n,
            r_max,
            grading: Grading::Uniform,
            q: 1.0,
        }
    }

    pub fn geometric(n: usize, r_max: f64, q: f64) -> Self {
        Self {
            n,
            r_max,
            grading: Grading::Geometric,
            q,
        }
    }

    /// Geometric grid with ratio `1 + 2/n` (capped at 1.05), so that the
    /// largest to smallest spacing is about `e^2` whatever `n` is.
    pub fn default_geometric(n: usize, r_max: f64) -> Self {
        Self::geometric(n, r_max, (1.0 + 2.0 / n as f64).min(1.05))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(invalid(format!(
                "grid needs at least 3 nodes, got {}",
                self.n
            )));
        }
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return Err(invalid(format!(
                "R_max must be positive and finite, got {}",
                self.r_max
            )));
        }
        if self.grading == Grading::Geometric && !(1.0..=1.05).contains(&self.q) {
            return Err(invalid(format!(
                "geometric ratio must lie in [1, 1.05], got {}",
                self.q
            )));
        }
        Ok(())
    }

    /// Same mapping with twice the nodes; every old node is kept.
    pub fn refined(&self) -> Self {
        Self {
            n: 2 * self.n,
            q: self.q.sqrt(),
            ..*self
        }
    }

    pub fn with_r_max(&self, r_max: f64) -> Self {
        Self { r_max, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    spec: GridSpec,
    r: Vec<f64>,
    h: Vec<f64>,
    dual: Vec<f64>,
    w0: Vec<f64>,
}

/// Builds the grid described by `spec`.
pub fn build_grid(spec: GridSpec) -> Result<Arc<RadialGrid>> {
    RadialGrid::new(spec).map(Arc::new)
}

impl RadialGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n;
        let nf = n as f64;
        let r: Vec<f64> = match spec.grading {
            Grading::Geometric if spec.q > 1.0 => {
                let lq = spec.q.ln();
                let den = (lq * nf).exp_m1();
                (1..=n)
                    .map(|i| spec.r_max * ((lq * i as f64).exp_m1() / den))
                    .collect()
            }
            _ => (1..=n).map(|i| spec.r_max * (i as f64 / nf)).collect(),
        };
        let mut h = Vec::with_capacity(n);
        let mut dual = Vec::with_capacity(n);
        let mut prev = 0.0;
        for &ri in &r {
            if ri <= prev {
                return Err(invalid("grid nodes are not strictly increasing"));
            }
            h.push(ri - prev);
            dual.push(0.5 * (prev + ri));
            prev = ri;
        }
        let w0 = (0..n)
            .map(|i| {
                if i + 1 < n {
                    0.5 * (h[i] + h[i + 1])
                } else {
                    0.5 * h[i]
                }
            })
            .collect();
        Ok(Self {
            spec,
            r,
            h,
            dual,
            w0,
        })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        self.r[self.r.len() - 1]
    }

    pub fn nodes(&self) -> &[f64] {
        &self.r
    }

    /// `h[k] = r_k - r_{k-1}`, with `h[0] = r_1`.
    pub fn spacing(&self) -> &[f64] {
        &self.h
    }

    /// Cell midpoints; `dual_nodes()[k]` lies between nodes `k-1` and `k`.
    pub fn dual_nodes(&self) -> &[f64] {
        &self.dual
    }

    /// Trapezoid weights for integrands that vanish at the origin.
    pub fn weights(&self) -> &[f64] {
        &self.w0
    }

    /// Grid for the same descriptor with `R_max` multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Arc<RadialGrid>> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(invalid(format!(
                "rescale factor must be positive, got {factor}"
            )));
        }
        build_grid(self.spec.with_r_max(self.spec.r_max * factor))
    }

    /// Coefficients `(c1, c2)` with `f(0) ~ c1 f(r_1) + c2 f(r_2)` for a field
    /// that is smooth in `r^2`.
    pub fn even_extrapolation(&self) -> (f64, f64) {
        let (a, b) = (self.r[0] * self.r[0], self.r[1] * self.r[1]);
        (b / (b - a), -a / (b - a))
    }

    pub fn origin_value(&self, f: &[f64], origin_power: u32) -> f64 {
        if origin_power > 0 {
            return 0.0;
        }
        let (c1, c2) = self.even_extrapolation();
        c1 * f[0] + c2 * f[1]
    }

    /// Running trapezoid integral `int_0^{r_i} f`.
    pub fn cumulative(&self, f: &[f64], origin_power: u32) -> Vec<f64> {
        let mut out = Vec::with_capacity(f.len());
        let mut acc = 0.0;
        let mut prev = self.origin_value(f, origin_power);
        for (fi, hi) in f.iter().zip(&self.h) {
            acc += 0.5 * hi * (prev + fi);
            out.push(acc);
            prev = *fi;
        }
        out
    }

    /// Second-order nodal derivative; one-sided at `R_max`.
    pub fn derivative(&self, f: &[f64], origin_power: u32) -> Vec<f64> {
        let n = f.len();
        let h = &self.h;
        let f0 = self.origin_value(f, origin_power);
        let mut out = Vec::with_capacity(n);
        for i in 0..n - 1 {
            let (hm, hp) = (h[i], h[i + 1]);
            let fm = if i == 0 { f0 } else { f[i - 1] };
            out.push(
                -hp / (hm * (hm + hp)) * fm
                    + (hp - hm) / (hm * hp) * f[i]
                    + hm / (hp * (hm + hp)) * f[i + 1],
            );
        }
        let (a, b) = (h[n - 2], h[n - 1]);
        let fmm = if n >= 3 { f[n - 3] } else { f0 };
        out.push(
            b / (a * (a + b)) * fmm - (a + b) / (a * b) * f[n - 2]
                + (2.0 * b + a) / (b * (a + b)) * f[n - 1],
        );
        out
    }

    /// Cell difference quotients `(f_k - f_{k-1}) / h_k`, one per cell.
    pub fn midpoint_derivative(&self, f: &[f64], origin_power: u32) -> Vec<f64> {
        let f0 = self.origin_value(f, origin_power);
        (0..f.len())
            .map(|k| {
                let fm = if k == 0 { f0 } else { f[k - 1] };
                (f[k] - fm) / self.h[k]
            })
            .collect()
    }

    /// Cell averages `(f_{k-1} + f_k) / 2`.
    pub fn midpoint_average(&self, f: &[f64], origin_power: u32) -> Vec<f64> {
        let f0 = self.origin_value(f, origin_power);
        (0..f.len())
            .map(|k| {
                let fm = if k == 0 { f0 } else { f[k - 1] };
                0.5 * (fm + f[k])
            })
            .collect()
    }

    /// Interpolation stencil taking cell-midpoint values to node `i`:
    /// `f(r_i) ~ w1 g[k1] + w2 g[k2]`.
    pub fn dual_to_node_stencil(&self, i: usize) -> (usize, f64, usize, f64) {
        let n = self.len();
        if i + 1 < n {
            let (a, b) = (self.h[i], self.h[i + 1]);
            (i, b / (a + b), i + 1, a / (a + b))
        } else {
            let t = (self.r[n - 1] - self.dual[n - 1]) / (self.dual[n - 1] - self.dual[n - 2]);
            (n - 2, -t, n - 1, 1.0 + t)
        }
    }

    pub fn dual_to_nodes(&self, g: &[f64]) -> Vec<f64> {
        (0..g.len())
            .map(|i| {
                let (k1, w1, k2, w2) = self.dual_to_node_stencil(i);
                w1 * g[k1] + w2 * g[k2]
            })
            .collect()
    }
}

/// Behaviour of a field at `R_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    /// Vanishes at `R_max` (Dirichlet).
    Zero,
    Free,
}

/// Values at the nodes of a grid, with the leading power of `r` at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    origin_power: u32,
    tail: Tail,
}

impl RadialField {
    pub fn new(
        grid: Arc<RadialGrid>,
        values: Vec<f64>,
        origin_power: u32,
        tail: Tail,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite field value at node {i}")));
        }
        Ok(Self {
            grid,
            values,
            origin_power,
            tail,
        })
    }

    pub fn from_fn(
        grid: Arc<RadialGrid>,
        f: impl Fn(f64) -> f64,
        origin_power: u32,
        tail: Tail,
    ) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values, origin_power, tail)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn origin_power(&self) -> u32 {
        self.origin_power
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn origin_value(&self) -> f64 {
        self.grid.origin_value(&self.values, self.origin_power)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Nodal derivative of `f`.
pub fn differentiate(f: &RadialField) -> RadialField {
    let values = f.grid.derivative(&f.values, f.origin_power);
    RadialField {
        grid: f.grid.clone(),
        values,
        origin_power: f.origin_power.saturating_sub(1),
        tail: f.tail,
    }
}

/// `int_0^r f` at every node.
pub fn integrate_cumulative(f: &RadialField) -> RadialField {
    let values = f.grid.cumulative(&f.values, f.origin_power);
    RadialField {
        grid: f.grid.clone(),
        values,
        origin_power: f.origin_power + 1,
        tail: Tail::Free,
    }
}

/// `int_0^{R_max} f`; the last entry of [`integrate_cumulative`].
pub fn integrate_total(f: &RadialField) -> f64 {
    let c = f.grid.cumulative(&f.values, f.origin_power);
    c[c.len() - 1]
}
