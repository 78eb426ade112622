//! Fixtures shared by the benchmarks under `benches/`.

use edm_core::choquard::ModelParams;
use edm_core::limit_state::{solve_limit, ScaledState};
use edm_core::GridSpec;

pub fn params() -> ModelParams {
    ModelParams::new(1.0, 0.6).expect("fixed parameters are valid")
}

pub fn canonical_spec(n: usize) -> GridSpec {
    GridSpec::default_geometric(n, 40.0)
}

/// The `eps = 0` state on `n` nodes.
pub fn anchor(n: usize) -> ScaledState {
    solve_limit(canonical_spec(n), &params(), 1e-10)
        .expect("limit solve converges")
        .state
}
