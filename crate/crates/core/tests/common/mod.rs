#![allow(dead_code)]

use std::sync::Arc;

use edm_core::choquard::ModelParams;
use edm_core::limit_state::{solve_limit, LimitSolution};
use edm_core::{build_grid, GridSpec, RadialGrid};

pub fn params() -> ModelParams {
    ModelParams::new(1.0, 0.6).unwrap()
}

/// Canonical geometric grid with the default spacing ratio.
pub fn canonical_spec(n: usize) -> GridSpec {
    GridSpec::default_geometric(n, 40.0)
}

pub fn model_grid(n: usize) -> Arc<RadialGrid> {
    build_grid(canonical_spec(n).with_r_max(40.0 / 2f64.sqrt())).unwrap()
}

pub fn limit(n: usize) -> LimitSolution {
    solve_limit(canonical_spec(n), &params(), 1e-10).unwrap()
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
