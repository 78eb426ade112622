//! Solvers for the small-frequency-gap regime of the spherically symmetric
//! Einstein-Dirac-Maxwell system.
//!
//! The pipeline runs from a Choquard ground state through the assembled limit
//! state at `eps = 0` to a Newton continuation branch in `eps = m - omega`,
//! followed by reconstruction of physical fields.

pub mod choquard;
pub mod continuation;
pub mod edm_system;
pub mod error;
pub mod grid;
pub mod limit_state;
pub mod newton;
pub mod physical;
pub mod potentials;
pub mod real;
pub mod sparse;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{
    build_grid, differentiate, integrate_cumulative, integrate_total, Grading, GridSpec,
    RadialField, RadialGrid, Tail,
};
