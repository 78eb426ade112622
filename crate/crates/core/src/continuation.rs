//! Predictor-corrector continuation of the scaled system in `eps`.

use serde::{Deserialize, Serialize};

use crate::choquard::ModelParams;
use crate::edm_system::EdmSystem;
use crate::error::{invalid, Error, Result};
use crate::limit_state::ScaledState;
use crate::newton::{damped_newton, NewtonOptions};
use crate::sparse::sup_norm;

/// A converged corrector solve.
#[derive(Debug, Clone)]
pub struct Corrected {
    pub state: ScaledState,
    pub residual_norm: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

/// Newton corrector at fixed `eps`, starting from `guess`.
pub fn newton_correct(
    eps: f64,
    guess: &ScaledState,
    params: &ModelParams,
    opts: &NewtonOptions,
) -> Result<Corrected> {
    if !(1e-12..=1e-6).contains(&opts.tol) {
        return Err(invalid(format!(
            "corrector tolerance must lie in [1e-12, 1e-6], got {}",
            opts.tol
        )));
    }
    let sys = EdmSystem::new(guess.grid.clone(), *params, eps)?;
    let report = damped_newton(&sys, guess.to_vector(), opts)?;
    // Re-evaluate rather than trusting the iteration's bookkeeping.
    let residual_norm = sup_norm(&sys.residual_vector(&report.x)?);
    if !(residual_norm < opts.tol) {
        return Err(Error::NoConvergence {
            iterations: report.iterations,
            last_residual: residual_norm,
            history: report.history,
        });
    }
    Ok(Corrected {
        state: ScaledState::from_vector(guess.grid.clone(), eps, &report.x)?,
        residual_norm,
        iterations: report.iterations,
        history: report.history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchOptions {
    pub eps_max: f64,
    pub n_steps: usize,
    /// Step halvings allowed per schedule step before the branch is truncated.
    pub max_step_halvings: usize,
    pub newton: NewtonOptions,
}

impl BranchOptions {
    pub fn new(eps_max: f64, n_steps: usize, newton: NewtonOptions) -> Self {
        Self {
            eps_max,
            n_steps,
            max_step_halvings: 10,
            newton,
        }
    }

    /// Targets `eps_max (k / n_steps)^2`, uniform in `sqrt(eps)`.
    pub fn schedule(&self) -> Vec<f64> {
        let s = self.eps_max.sqrt();
        (1..=self.n_steps)
            .map(|k| {
                let t = s * k as f64 / self.n_steps as f64;
                if k == self.n_steps {
                    self.eps_max
                } else {
                    t * t
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub eps: f64,
    pub state: ScaledState,
    pub residual_norm: f64,
    pub newton_iters: usize,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub eps_reached: f64,
    pub truncated: bool,
    /// Why the branch stopped early, if it did.
    pub stop_reason: Option<String>,
}

fn secant(prev: &BranchPoint, last: &BranchPoint, eps: f64) -> Result<ScaledState> {
    let t = (eps - last.eps) / (last.eps - prev.eps);
    let (a, b) = (prev.state.to_vector(), last.state.to_vector());
    let x: Vec<f64> = a.iter().zip(&b).map(|(p, q)| q + t * (q - p)).collect();
    ScaledState::from_vector(last.state.grid.clone(), eps, &x)
}

/// Follows the branch from `limit` (the `eps = 0` state) up to
/// `opts.eps_max`. The first point is `limit` itself.
pub fn continue_branch(
    params: &ModelParams,
    limit: &ScaledState,
    opts: &BranchOptions,
) -> Result<Branch> {
    if !(opts.eps_max.is_finite() && opts.eps_max >= 0.0) {
        return Err(invalid(format!(
            "eps_max must be finite and non-negative, got {}",
            opts.eps_max
        )));
    }
    if limit.eps != 0.0 {
        return Err(invalid("the branch must start from an eps = 0 state"));
    }
    let sys0 = EdmSystem::new(limit.grid.clone(), *params, 0.0)?;
    let r0 = sup_norm(&sys0.residual_vector(&limit.to_vector())?);
    let mut points = vec![BranchPoint {
        eps: 0.0,
        state: limit.clone(),
        residual_norm: r0,
        newton_iters: 0,
    }];
    if opts.eps_max == 0.0 || opts.n_steps == 0 {
        return Ok(Branch {
            points,
            eps_reached: 0.0,
            truncated: false,
            stop_reason: None,
        });
    }

    for target in opts.schedule() {
        let mut halvings = 0;
        loop {
            let last = points.last().expect("branch is never empty");
            if last.eps >= target {
                break;
            }
            // Halving acts on sqrt(eps), the schedule's own variable.
            let (s0, s1) = (last.eps.sqrt(), target.sqrt());
            let ds = (s1 - s0) * 0.5f64.powi(halvings as i32);
            let eps = if halvings == 0 {
                target
            } else {
                (s0 + ds) * (s0 + ds)
            };
            let guess = match points.len() {
                1 => last.state.with_eps(eps),
                k => secant(&points[k - 2], last, eps)?,
            };
            match newton_correct(eps, &guess, params, &opts.newton) {
                Ok(c) => {
                    points.push(BranchPoint {
                        eps,
                        state: c.state,
                        residual_norm: c.residual_norm,
                        newton_iters: c.iterations,
                    });
                    halvings = 0;
                }
                Err(
                    e @ (Error::NoConvergence { .. }
                    | Error::MetricBreakdown { .. }
                    | Error::Singular(_)),
                ) => {
                    halvings += 1;
                    if halvings > opts.max_step_halvings {
                        let eps_reached = points.last().map_or(0.0, |p| p.eps);
                        return Ok(Branch {
                            points,
                            eps_reached,
                            truncated: true,
                            stop_reason: Some(format!(
                                "corrector failed near eps = {eps:.3e}: {e}"
                            )),
                        });
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }
    let eps_reached = points.last().map_or(0.0, |p| p.eps);
    Ok(Branch {
        points,
        eps_reached,
        truncated: false,
        stop_reason: None,
    })
}
