//! `graphon`: sample graphs from graphons, transfer steady states to them and
//! check their stability.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage or config error,
//! 3 some instance failed under `--strict`.

mod commands;
mod config;
mod output;
mod repro;
mod run;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use graphon_core::models::WcBranch;
use graphon_core::{CutNormMode, SamplingMode};

use crate::config::{kernel_arg, model_arg, ExperimentConfig};
use crate::repro::Figure;
use crate::run::Ctx;

/// A problem with the invocation or the config, as opposed to a failed computation.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "graphon", version, about = "Steady states of network dynamics through graphon limits")]
struct Cli {
    /// Experiment config (JSON); command-line flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: config `outputs`, else ./out]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Exit with status 3 if any instance fails or does not converge
    #[arg(long, global = true)]
    strict: bool,
    /// Replace every configured seed by this one
    #[arg(long, global = true, env = "GRAPHON_SEED")]
    seed_override: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct InstanceArgs {
    /// Kernel: inline JSON, a JSON file, or a dense CSV step graphon
    #[arg(long)]
    kernel: Option<String>,
    /// Model: inline JSON or a JSON file
    #[arg(long)]
    model: Option<String>,
    /// Graph sizes (repeat or comma-separate)
    #[arg(long = "n", value_delimiter = ',')]
    n: Vec<usize>,
    /// Seeds (repeat or comma-separate)
    #[arg(long = "seed", value_delimiter = ',')]
    seed: Vec<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Twist of the Kuramoto state
    #[arg(long, allow_negative_numbers = true)]
    m: Option<i64>,
}

#[derive(Args, Default)]
struct SolveArgs {
    /// Full Newton instead of the frozen-Jacobian iteration
    #[arg(long)]
    newton: bool,
    /// Wilson-Cowan branch when several constant states exist
    #[arg(long, value_enum)]
    branch: Option<BranchArg>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample graphs; write adjacency CSVs, manifests and a deviation summary
    Sample {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Also write `i j w` edge lists
        #[arg(long)]
        edge_list: bool,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        refinement: Option<usize>,
    },
    /// Cut norm of a matrix file, or cut distance of sampled graphs to the kernel
    Cutnorm {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Dense CSV, or edge list (.txt/.edges)
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        /// Also estimate the second cut norm (with --input)
        #[arg(long)]
        second: bool,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        refinement: Option<usize>,
    },
    /// Transfer the continuum steady state to sampled graphs
    Solve {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Spectra and stability verdicts of linearizations
    Spectrum {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        solve: SolveArgs,
        /// Use the operator frozen at the continuum state instead of DG_n at the solution
        #[arg(long)]
        frozen: bool,
        /// Tabulate the analytic twisted-state eigenvalues of a ring kernel
        #[arg(long)]
        ring_analytic: bool,
        #[arg(long)]
        ell_max: Option<i64>,
        /// Write each linearization as CSV plus a JSON header
        #[arg(long)]
        export_operator: bool,
        #[arg(long)]
        margin: Option<f64>,
    },
    /// Integrate the dynamics and test decay of perturbations
    Dynamics {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        /// Keep every k-th trajectory sample
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Empirical Lipschitz ratios of T_n and its second iterate
    Probe {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        pairs: Option<usize>,
    },
    /// Regenerate the data behind a figure
    Repro {
        #[arg(value_enum)]
        figure: Figure,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Random,
    Deterministic,
    BipartiteAligned,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Low,
    Middle,
    High,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Auto,
    BruteForce,
    Heuristic,
}

/// Flags override the config; a seed override beats both.
fn apply_instance(cfg: &mut ExperimentConfig, a: &InstanceArgs, seed_override: Option<u64>) {
    if let Some(k) = &a.kernel {
        cfg.kernel = Some(kernel_arg(k));
    }
    if let Some(m) = &a.model {
        cfg.model = Some(model_arg(m));
    }
    if !a.n.is_empty() {
        cfg.n_list = a.n.clone();
    }
    if !a.seed.is_empty() {
        cfg.seeds = a.seed.clone();
    }
    if let Some(m) = a.mode {
        cfg.mode = match m {
            ModeArg::Random => SamplingMode::Random,
            ModeArg::Deterministic => SamplingMode::Deterministic,
            ModeArg::BipartiteAligned => SamplingMode::BipartiteAligned,
        };
    }
    if a.m.is_some() {
        cfg.m = a.m;
    }
    if let Some(s) = seed_override {
        cfg.seeds = vec![s];
    }
}

fn apply_solve(cfg: &mut ExperimentConfig, s: &SolveArgs) {
    cfg.newton |= s.newton;
    if let Some(b) = s.branch {
        cfg.branch = match b {
            BranchArg::Low => WcBranch::Low,
            BranchArg::Middle => WcBranch::Middle,
            BranchArg::High => WcBranch::High,
        };
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn execute(cli: Cli) -> Result<usize> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let out = cli.out.clone().or_else(|| cfg.outputs.clone()).unwrap_or_else(|| PathBuf::from("out"));
    rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global().ok();

    if let Command::Repro { figure } = cli.command {
        cfg.solver.validate().map_err(|e| UsageError(e.to_string()))?;
        return repro::run(figure, &out, cli.seed_override, cfg.solver);
    }

    let ctx_of = |cfg: ExperimentConfig| Ctx { cfg, out: out.clone() };
    match cli.command {
        Command::Sample { inst, edge_list, restarts, refinement } => {
            apply_instance(&mut cfg, &inst, cli.seed_override);
            set(&mut cfg.restarts, restarts);
            set(&mut cfg.refinement, refinement);
            cfg.validate()?;
            commands::sample(&ctx_of(cfg), edge_list)
        }
        Command::Cutnorm { inst, input, method, second, restarts, refinement } => {
            apply_instance(&mut cfg, &inst, cli.seed_override);
            set(&mut cfg.restarts, restarts);
            set(&mut cfg.refinement, refinement);
            if input.is_none() {
                cfg.validate()?;
            } else if cfg.restarts == 0 {
                return Err(UsageError("restarts must be positive".into()).into());
            }
            let mode = match method {
                MethodArg::Auto => CutNormMode::Auto,
                MethodArg::BruteForce => CutNormMode::BruteForce,
                MethodArg::Heuristic => CutNormMode::Heuristic,
            };
            commands::cutnorm_cmd(&ctx_of(cfg), input.as_deref(), mode, second)
        }
        Command::Solve { inst, solve } => {
            apply_instance(&mut cfg, &inst, cli.seed_override);
            apply_solve(&mut cfg, &solve);
            cfg.validate()?;
            commands::solve(&ctx_of(cfg))
        }
        Command::Spectrum { inst, solve, frozen, ring_analytic, ell_max, export_operator, margin } => {
            apply_instance(&mut cfg, &inst, cli.seed_override);
            apply_solve(&mut cfg, &solve);
            set(&mut cfg.ell_max, ell_max);
            set(&mut cfg.margin, margin);
            if !ring_analytic {
                cfg.validate()?;
            }
            commands::spectrum(&ctx_of(cfg), frozen, ring_analytic, export_operator)
        }
        Command::Dynamics { inst, solve, dt, t_end, stride, eps } => {
            apply_instance(&mut cfg, &inst, cli.seed_override);
            apply_solve(&mut cfg, &solve);
            set(&mut cfg.dt, dt);
            set(&mut cfg.t_end, t_end);
            set(&mut cfg.stride, stride);
            set(&mut cfg.eps, eps);
            cfg.validate()?;
            commands::dynamics(&ctx_of(cfg))
        }
        Command::Probe { inst, solve, rho, pairs } => {
            apply_instance(&mut cfg, &inst, cli.seed_override);
            apply_solve(&mut cfg, &solve);
            set(&mut cfg.rho, rho);
            set(&mut cfg.pairs, pairs);
            cfg.validate()?;
            commands::probe(&ctx_of(cfg))
        }
        Command::Repro { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let strict = cli.strict;
    match execute(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("{failed} instance(s) failed or did not converge");
            if strict {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
