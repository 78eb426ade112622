//! Self-checks of the discretization and of the scaled equations, shared by
//! the command-line `verify` command and the test suites.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::choquard::{check_nondegeneracy, ModelParams};
use crate::edm_system::{EdmSystem, Mutation, SCALING_EXPONENTS};
use crate::error::Result;
use crate::grid::{build_grid, GridSpec, RadialGrid};
use crate::limit_state::{solve_limit, ScaledState};
use crate::physical::{reconstruct, unscaled_residual};

/// A smooth state with the right behaviour at both ends: `phi ~ r` and
/// `chi ~ r^2` near the origin, all four fields small at `R_max`. Not a
/// solution of anything.
pub fn random_smooth_state(grid: &Arc<RadialGrid>, eps: f64, seed: u64) -> Result<ScaledState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = grid.r_max();
    let mut bumps = |count: usize| -> Vec<(f64, f64, f64)> {
        (0..count)
            .map(|_| {
                let amp = rng.random_range(-1.0..1.0);
                let centre = rng.random_range(0.0..0.3 * len);
                let width = rng.random_range(0.05..0.2) * len;
                (amp, centre, width)
            })
            .collect()
    };
    let (bp, bc, bt, bz) = (bumps(3), bumps(3), bumps(2), bumps(2));
    let sum = |b: &[(f64, f64, f64)], x: f64| {
        b.iter()
            .map(|(a, c, w)| a * (-((x - c) / w).powi(2)).exp())
            .sum::<f64>()
    };
    let r = grid.nodes();
    let d = grid.dual_nodes();
    let (ct, cz) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
    let phi = r.iter().map(|x| 0.1 * x * sum(&bp, *x)).collect();
    let chi = d.iter().map(|x| 0.1 * x * x * sum(&bc, *x)).collect();
    // Potentials with a 1/r tail, as the true ones have.
    let tau = r
        .iter()
        .map(|x| ct / (1.0 + x * x).sqrt() + 0.3 * sum(&bt, *x))
        .collect();
    let zeta = r
        .iter()
        .map(|x| cz / (1.0 + x * x).sqrt() + 0.3 * sum(&bz, *x))
        .collect();
    ScaledState::new(grid.clone(), eps, phi, chi, tau, zeta)
}

/// Relative mismatch, per equation, between the physical residuals of the
/// reconstructed fields and `eps^p` times the scaled residuals.
pub fn scaling_oracle_error(
    state: &ScaledState,
    params: &ModelParams,
    mutation: Option<Mutation>,
) -> Result<[f64; 4]> {
    let eps = state.eps;
    let scaled = EdmSystem::new(state.grid.clone(), *params, eps)?
        .with_mutation(mutation)
        .residual(state)?;
    let phys = unscaled_residual(&reconstruct(state, params)?)?;
    let (r, d) = (state.grid.nodes(), state.grid.dual_nodes());
    let mut out = [0.0; 4];
    for q in 0..4 {
        let (p, s) = (phys.components()[q], scaled.components()[q]);
        let (mut err, mut size) = (0.0f64, 0.0f64);
        for (j, (pv, sv)) in p.iter().zip(s).enumerate() {
            let mut expected = eps.powf(SCALING_EXPONENTS.p[q]) * sv;
            if q == 2 {
                // The lapse equation carries an extra factor 2r.
                let k = j + 1;
                expected *= 2.0 * r[k - 1] * r[k] / d[k];
            }
            err = err.max((pv - expected).abs());
            size = size.max(expected.abs());
        }
        out[q] = if size > 0.0 { err / size } else { err };
    }
    Ok(out)
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    fn below(name: &str, value: f64, threshold: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: value < threshold,
            value,
            threshold,
            detail,
        }
    }

    fn within(name: &str, value: f64, lo: f64, hi: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: (lo..=hi).contains(&value),
            value,
            threshold: hi,
            detail: format!("expected in [{lo}, {hi}]; {detail}"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    pub params: ModelParams,
    /// Grid of the canonical problem; the model grid is derived from it.
    pub grid: GridSpec,
    pub tol: f64,
    pub seed: u64,
    pub n_random: usize,
    pub mutation: Option<Mutation>,
}

fn grid_derivative_order() -> Result<Check> {
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for n in [50, 100, 200, 400] {
        let g = build_grid(GridSpec::uniform(n, 3.0))?;
        let f: Vec<f64> = g.nodes().iter().map(|x| x.sin()).collect();
        let df = g.derivative(&f, 1);
        let err = g
            .nodes()
            .iter()
            .zip(&df)
            .fold(0.0f64, |m, (x, v)| m.max((v - x.cos()).abs()));
        hs.push(3.0 / n as f64);
        errs.push(err);
    }
    let p = loglog_slope(&hs, &errs);
    Ok(Check::within(
        "derivative_order",
        p,
        1.8,
        2.2,
        format!("errors {}", sci(&errs)),
    ))
}

fn fd_checks(sys: &EdmSystem, x: &[f64], dir: &[f64], label: &str) -> Result<Vec<Check>> {
    let state = ScaledState::from_vector(sys.grid().clone(), sys.eps(), x)?;
    let jac = sys.jacobian(&state)?;
    let jd = jac.apply_assembled(dir)?;
    let jd_ad = jac.apply(dir)?;
    let f0 = sys.residual_vector(x)?;
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let hs = [1e-2, 1e-3, 1e-4];
    let (mut first, mut second) = (Vec::new(), Vec::new());
    for h in hs {
        let xp: Vec<f64> = x.iter().zip(dir).map(|(a, b)| a + h * b).collect();
        let fp = sys.residual_vector(&xp)?;
        let diff: Vec<f64> = fp.iter().zip(&f0).map(|(a, b)| a - b).collect();
        let rem: Vec<f64> = diff.iter().zip(&jd).map(|(a, b)| a - h * b).collect();
        first.push(sup(&diff));
        second.push(sup(&rem));
    }
    let ad_gap = jd
        .iter()
        .zip(&jd_ad)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / sup(&jd);
    Ok(vec![
        Check::within(
            &format!("fd_slope_{label}"),
            loglog_slope(&hs, &first),
            0.8,
            1.2,
            format!("|F(x+hd)-F(x)| = {}", sci(&first)),
        ),
        Check::within(
            &format!("fd_remainder_order_{label}"),
            loglog_slope(&hs, &second),
            1.8,
            2.2,
            format!("|F(x+hd)-F(x)-hJd| = {}", sci(&second)),
        ),
        Check::below(
            &format!("jacobian_assembled_vs_ad_{label}"),
            ad_gap,
            1e-10,
            "relative sup gap between assembled and forward-mode J d".into(),
        ),
    ])
}

/// Runs the full suite. Expensive steps (the refined solves) scale with the
/// grid size in `cfg`.
pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let p = &cfg.params;
    let mut checks = vec![grid_derivative_order()?];

    // Ground state, its refinement behaviour and the transfer to the model.
    let lim = solve_limit(cfg.grid, p, cfg.tol)?;
    // Rounding grows like 1/h^2, so the refined solves get a floor on tol.
    let fine_tol = cfg.tol.max(1e-9);
    let lim2 = solve_limit(cfg.grid.refined(), p, fine_tol)?;
    let lim4 = solve_limit(cfg.grid.refined().refined(), p, fine_tol)?;
    checks.push(Check::below(
        "choquard_residual",
        lim.canonical.residual_norm,
        1e-8,
        format!("{} Newton iterations", lim.canonical.iterations),
    ));
    let v4 = lim4.canonical.phi.values();
    let scale = lim4.canonical.phi.sup_norm();
    let gap = |v: &[f64], stride: usize| {
        v.iter().enumerate().fold(0.0f64, |m, (i, x)| {
            m.max((x - v4[stride * (i + 1) - 1]).abs())
        }) / scale
    };
    let (e1, e2) = (
        gap(lim.canonical.phi.values(), 4),
        gap(lim2.canonical.phi.values(), 2),
    );
    checks.push(Check::below(
        "choquard_refinement_ratio",
        -(e1 / e2),
        -3.5,
        format!(
            "error vs 4n solution: n {e1:.3e}, 2n {e2:.3e}, ratio {:.2}",
            e1 / e2
        ),
    ));
    checks.push(Check::below(
        "scaling_transfer",
        lim.ground_state.residual_norm,
        1e-6,
        "residual of the rescaled ground state in the model equation".into(),
    ));
    let s0 = &lim.state;
    let anchor = EdmSystem::new(s0.grid.clone(), *p, 0.0)?.residual(s0)?;
    checks.push(Check::below(
        "anchor_residual",
        anchor.max_norm(),
        1e-6,
        format!(
            "equation sup-norms {}, boundary {}",
            sci(&anchor.sup_norms()),
            sci(&anchor.boundary)
        ),
    ));
    let tmax = s0.tau.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let ratio = s0
        .tau
        .iter()
        .zip(&s0.zeta)
        .fold(0.0f64, |m, (t, z)| m.max((z * p.m() - t * p.e()).abs()))
        / tmax;
    checks.push(Check::below(
        "anchor_potential_ratio",
        ratio,
        1e-12,
        "max |zeta m - tau e| / max |tau|".into(),
    ));

    // Nondegeneracy and its refinement stability.
    let chq = check_nondegeneracy(&lim.ground_state, p)?;
    let chq2 = check_nondegeneracy(&lim2.ground_state, p)?;
    checks.push(Check::below(
        "choquard_sigma_min_stability",
        (chq - chq2).abs() / chq,
        0.1,
        format!("sigma_min {chq:.4e} (n), {chq2:.4e} (2n)"),
    ));
    let sig = EdmSystem::new(s0.grid.clone(), *p, 0.0)?
        .jacobian(s0)?
        .smallest_singular_value()?;
    let s02 = &lim2.state;
    let sig2 = EdmSystem::new(s02.grid.clone(), *p, 0.0)?
        .jacobian(s02)?
        .smallest_singular_value()?;
    checks.push(Check::below(
        "anchor_sigma_min_stability",
        if sig > 0.0 {
            (sig - sig2).abs() / sig
        } else {
            f64::INFINITY
        },
        0.1,
        format!("sigma_min {sig:.4e} (n), {sig2:.4e} (2n)"),
    ));

    // Directional derivatives at the anchor and at a generic state.
    let dir = random_smooth_state(&s0.grid, 0.0, cfg.seed.wrapping_add(1))?.to_vector();
    let sys0 = EdmSystem::new(s0.grid.clone(), *p, 0.0)?;
    checks.extend(fd_checks(&sys0, &s0.to_vector(), &dir, "anchor")?);
    let generic = random_smooth_state(&s0.grid, 1e-2, cfg.seed)?;
    let sys1 = EdmSystem::new(s0.grid.clone(), *p, 1e-2)?;
    checks.extend(fd_checks(&sys1, &generic.to_vector(), &dir, "generic")?);

    // Physical residuals against eps^p times the scaled ones.
    let mut worst = [0.0f64; 4];
    for k in 0..cfg.n_random {
        for eps in [1e-4, 1e-3, 1e-2] {
            let st = random_smooth_state(&s0.grid, eps, cfg.seed.wrapping_add(100 + k as u64))?;
            let err = scaling_oracle_error(&st, p, cfg.mutation)?;
            for q in 0..4 {
                worst[q] = worst[q].max(err[q]);
            }
        }
    }
    checks.push(Check::below(
        "scaling_oracle",
        worst.iter().copied().fold(0.0, f64::max),
        1e-8,
        format!(
            "{} states x 3 eps, worst per equation {}",
            cfg.n_random,
            sci(&worst)
        ),
    ));
    Ok(VerifyReport { checks })
}

/// Leading-order ADM mass `8 pi m sqrt(eps) int phi0^2` of the branch.
pub fn adm_mass_leading_order(params: &ModelParams, l2_mass: f64, eps: f64) -> f64 {
    8.0 * PI * params.m() * l2_mass * eps.sqrt()
}
