//! `edm`: limit solves, branch continuation and verification runs.

mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use edm_core::edm_system::Mutation;
use edm_core::Grading;

use run::{BranchSettings, Command, ExitStatus, RunConfig, SolverSettings};

#[derive(Parser)]
#[command(
    name = "edm",
    version,
    about = "Einstein-Dirac-Maxwell solution branches from the Choquard limit"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the limit equation and write the eps = 0 state.
    SolveLimit {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Follow the solution branch from eps = 0 to --eps-max.
    Branch {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        eps_max: f64,
        #[arg(long)]
        steps: usize,
    },
    /// Run the self-check suite and write a pass/fail report.
    Verify {
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        m: f64,
        #[arg(long, default_value_t = 0.6, allow_hyphen_values = true)]
        e: f64,
        #[command(flatten)]
        common: CommonArgs,
        /// Smaller grid (n = 500) for a fast run.
        #[arg(long)]
        quick: bool,
        /// Flip the sign of one remainder term (k1..k4).
        #[arg(long)]
        mutate: Option<Mutation>,
    },
    /// Repeat the run recorded in a manifest.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, allow_hyphen_values = true)]
    m: f64,
    #[arg(long, allow_hyphen_values = true)]
    e: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum GradingArg {
    Uniform,
    Geometric,
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long, default_value_t = 2000)]
    n: usize,
    /// Outer radius of the canonical problem; the model grid is this divided
    /// by sqrt(2m).
    #[arg(long, default_value_t = 40.0)]
    rmax: f64,
    #[arg(long, value_enum, default_value_t = GradingArg::Geometric)]
    grading: GradingArg,
    /// Spacing ratio of the geometric grid [default: 1 + 2/n, at most 1.05].
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 30)]
    max_iters: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl CommonArgs {
    fn config(&self, command: Command, m: f64, e: f64, n: usize) -> RunConfig {
        let q = match self.grading {
            GradingArg::Uniform => 1.0,
            GradingArg::Geometric => self
                .q
                .unwrap_or(edm_core::GridSpec::default_geometric(n, self.rmax).q),
        };
        RunConfig {
            command,
            m,
            e,
            grid: edm_core::GridSpec {
                n,
                r_max: self.rmax,
                grading: match self.grading {
                    GradingArg::Uniform => Grading::Uniform,
                    GradingArg::Geometric => Grading::Geometric,
                },
                q,
            },
            solver: SolverSettings {
                tol: self.tol,
                max_iters: self.max_iters,
                damping: true,
            },
            branch: None,
            seed: self.seed,
            quick: false,
            mutation: None,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(64),
            };
        }
    };
    let (config, out) = match cli.command {
        Cmd::SolveLimit { model, common } => (
            common.config(Command::SolveLimit, model.m, model.e, common.n),
            common.out.clone(),
        ),
        Cmd::Branch {
            model,
            common,
            eps_max,
            steps,
        } => {
            let mut c = common.config(Command::Branch, model.m, model.e, common.n);
            c.branch = Some(BranchSettings {
                eps_max,
                n_steps: steps,
            });
            (c, common.out.clone())
        }
        Cmd::Verify {
            m,
            e,
            common,
            quick,
            mutate,
        } => {
            let n = if quick { 500 } else { common.n };
            let mut c = common.config(Command::Verify, m, e, n);
            c.quick = quick;
            c.mutation = mutate;
            (c, common.out.clone())
        }
        Cmd::Rerun { manifest, out } => match run::load_manifest(&manifest) {
            Ok(c) => (c, out),
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(64);
            }
        },
    };
    let status = match run::execute(&config, &out) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            run::classify(&e)
        }
    };
    match status {
        ExitStatus::Success => ExitCode::SUCCESS,
        other => ExitCode::from(other as u8),
    }
}
