use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use edm_core::continuation::{continue_branch, BranchOptions};
use edm_core::edm_system::{scaled_residual, Mutation};
use edm_core::limit_state::{solve_limit, ScaledState};
use edm_core::newton::NewtonOptions;
use edm_core::physical::{diagnostics, reconstruct, Diagnostics};
use edm_core::verify::{run_verify, VerifyConfig};
use edm_core::GridSpec;

use crate::output::{csv, csv_rows, num, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SolveLimit,
    Branch,
    Verify,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iters: usize,
    pub damping: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BranchSettings {
    pub eps_max: f64,
    pub n_steps: usize,
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub m: f64,
    pub e: f64,
    /// Grid of the canonical problem.
    pub grid: GridSpec,
    pub solver: SolverSettings,
    pub branch: Option<BranchSettings>,
    pub seed: u64,
    pub quick: bool,
    pub mutation: Option<Mutation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PointRecord {
    eps: f64,
    residual_norm: f64,
    newton_iters: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Provenance {
    timestamp: u64,
    artifact_version: String,
    residual_norms: Vec<PointRecord>,
    eps_reached: Option<f64>,
    truncated: bool,
    stop_reason: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    #[serde(flatten)]
    config: RunConfig,
    /// Outer radius of the model grid actually used.
    model_r_max: f64,
    outputs: Vec<String>,
    provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    VerificationFailed = 1,
    DomainError = 2,
    EmptyResult = 3,
}

pub fn load_manifest(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let m: Manifest =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(m.config)
}

/// Exit status for an error that escaped a command.
pub fn classify(err: &anyhow::Error) -> ExitStatus {
    match err.downcast_ref::<edm_core::Error>() {
        Some(edm_core::Error::InvalidArgument(_)) => ExitStatus::DomainError,
        _ => ExitStatus::VerificationFailed,
    }
}

/// `SOURCE_DATE_EPOCH` when set, so that reproducible builds of the outputs
/// stay reproducible; the wall clock otherwise.
fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs())
        })
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(self.dir, name, bytes)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn scaled_csv(s: &ScaledState) -> Vec<u8> {
    let chi = s.grid.dual_to_nodes(&s.chi);
    csv(
        &["r", "phi", "chi", "tau", "zeta"],
        &[s.grid.nodes(), &s.phi, &chi, &s.tau, &s.zeta],
    )
}

pub fn execute(cfg: &RunConfig, out: &Path) -> Result<ExitStatus> {
    let params = cfg.params()?;
    cfg.grid.validate()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut w = Writer {
        dir: out,
        files: Vec::new(),
    };
    let mut prov = Provenance {
        timestamp: timestamp(),
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        residual_norms: Vec::new(),
        eps_reached: None,
        truncated: false,
        stop_reason: None,
    };
    let newton = NewtonOptions {
        tol: cfg.solver.tol,
        max_iters: cfg.solver.max_iters,
        damping: cfg.solver.damping,
        ..NewtonOptions::default()
    };
    let mut model_r_max = cfg.grid.r_max / params.a_coef().sqrt();
    let mut status = ExitStatus::Success;

    match cfg.command {
        Command::SolveLimit => {
            let lim = solve_limit(cfg.grid, &params, cfg.solver.tol)?;
            let res = scaled_residual(0.0, &lim.state, &params)?.max_norm();
            println!(
                "limit state: {} Newton iterations, Choquard residual {:.3e}, scaled residual {:.3e}",
                lim.canonical.iterations, lim.canonical.residual_norm, res
            );
            w.put("limit.csv", &scaled_csv(&lim.state))?;
            prov.residual_norms.push(PointRecord {
                eps: 0.0,
                residual_norm: res,
                newton_iters: lim.canonical.iterations,
            });
            model_r_max = lim.state.grid.r_max();
        }
        Command::Branch => {
            let b = cfg
                .branch
                .context("branch settings missing from the run configuration")?;
            let lim = solve_limit(cfg.grid, &params, cfg.solver.tol)?;
            model_r_max = lim.state.grid.r_max();
            let mut opts = BranchOptions::new(b.eps_max, b.n_steps, newton);
            opts.newton.tol = cfg.solver.tol.clamp(1e-12, 1e-6);
            let branch = continue_branch(&params, &lim.state, &opts)?;
            let header = [
                "k",
                "eps",
                "omega",
                "newton_iters",
                "residual_norm",
                "res1",
                "res2",
                "res3",
                "res4",
                "phys_res1",
                "phys_res2",
                "phys_res3",
                "phys_res4",
                "adm_mass",
                "adm_spread",
                "norm_integral",
                "min_A",
                "sup_t",
                "t_outer",
                "v_outer",
            ];
            let mut rows = Vec::new();
            for (k, pt) in branch.points.iter().enumerate() {
                w.put(&format!("point_{k}_scaled.csv"), &scaled_csv(&pt.state))?;
                let scaled = scaled_residual(pt.eps, &pt.state, &params)?.sup_norms();
                let diag = if pt.eps > 0.0 {
                    let phys = reconstruct(&pt.state, &params)?;
                    let big_a = phys.big_a();
                    let big_t = phys.big_t();
                    w.put(
                        &format!("point_{k}_physical.csv"),
                        &csv(
                            &["R", "Phi1", "Phi2", "A", "T", "V"],
                            &[
                                phys.grid.nodes(),
                                phys.phi1.values(),
                                phys.phi2.values(),
                                &big_a,
                                &big_t,
                                phys.v.values(),
                            ],
                        ),
                    )?;
                    diagnostics(&phys)?
                } else {
                    // Physical fields vanish identically at eps = 0.
                    Diagnostics {
                        adm_mass: 0.0,
                        adm_spread: 0.0,
                        norm_integral: 0.0,
                        sup_t: 0.0,
                        min_a: 1.0,
                        max_a: 1.0,
                        t_outer: 0.0,
                        v_outer: 0.0,
                        unscaled_residual_norms: [0.0; 4],
                    }
                };
                let mut row = vec![
                    k.to_string(),
                    num(pt.eps),
                    num(params.m() - pt.eps),
                    pt.newton_iters.to_string(),
                    num(pt.residual_norm),
                ];
                row.extend(scaled.iter().map(|x| num(*x)));
                row.extend(diag.unscaled_residual_norms.iter().map(|x| num(*x)));
                row.extend(
                    [
                        diag.adm_mass,
                        diag.adm_spread,
                        diag.norm_integral,
                        diag.min_a,
                        diag.sup_t,
                        diag.t_outer,
                        diag.v_outer,
                    ]
                    .iter()
                    .map(|x| num(*x)),
                );
                rows.push(row);
                prov.residual_norms.push(PointRecord {
                    eps: pt.eps,
                    residual_norm: pt.residual_norm,
                    newton_iters: pt.newton_iters,
                });
            }
            w.put("branch.csv", &csv_rows(&header, &rows))?;
            println!(
                "branch: {} points, eps reached {:.4e}{}",
                branch.points.len(),
                branch.eps_reached,
                if branch.truncated { " (truncated)" } else { "" }
            );
            if let Some(reason) = &branch.stop_reason {
                eprintln!("branch stopped early: {reason}");
            }
            prov.eps_reached = Some(branch.eps_reached);
            prov.truncated = branch.truncated;
            prov.stop_reason = branch.stop_reason.clone();
            if b.eps_max > 0.0 && branch.points.len() == 1 {
                eprintln!("no branch points beyond eps = 0");
                status = ExitStatus::EmptyResult;
            }
        }
        Command::Verify => {
            let vc = VerifyConfig {
                params,
                grid: cfg.grid,
                tol: cfg.solver.tol,
                seed: cfg.seed,
                n_random: 20,
                mutation: cfg.mutation,
            };
            let report = run_verify(&vc)?;
            for c in &report.checks {
                println!(
                    "{:4} {:36} {:>12.4e}  {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.detail
                );
            }
            w.put(
                "verify_report.json",
                format!("{}\n", serde_json::to_string_pretty(&report)?).as_bytes(),
            )?;
            if !report.all_passed() {
                let names: Vec<&str> = report.failures().iter().map(|c| c.name.as_str()).collect();
                eprintln!("verification failed: {}", names.join(", "));
                status = ExitStatus::VerificationFailed;
            }
        }
    }

    let manifest = Manifest {
        config: cfg.clone(),
        model_r_max,
        outputs: w.files.clone(),
        provenance: prov,
    };
    write_atomic(
        out,
        "manifest.json",
        format!("{}\n", serde_json::to_string_pretty(&manifest)?).as_bytes(),
    )?;
    Ok(status)
}

impl RunConfig {
    fn params(&self) -> Result<edm_core::choquard::ModelParams> {
        Ok(edm_core::choquard::ModelParams::new(self.m, self.e)?)
    }
}
