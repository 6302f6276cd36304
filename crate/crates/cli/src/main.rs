//! `hj-sweep`: convergence tables and CFL scans for the HWENO fixed-point
//! sweeping solver.

mod output;
mod study;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hj_sweep::problems::custom::load_problem;
use hj_sweep::problems::{by_name, registry};
use hj_sweep::solver::{SchemeKind, DEFAULT_HISTORY_STRIDE, DEFAULT_MAX_ITER, DEFAULT_TOL};
use hj_sweep::ReconstructionMode;

use study::{ProblemSource, RunConfig, Status};

const EXIT_FAILURE: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const EXIT_USAGE: u8 = 64;

/// Worker count for independent runs.
const WORKERS_ENV: &str = "HJ_SWEEP_WORKERS";

#[derive(Parser)]
#[command(
    name = "hj-sweep",
    version,
    about = "Fifth-order HWENO fixed-point sweeping for static Hamilton-Jacobi equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve on each mesh of a ladder and tabulate errors and orders.
    Run(RunArgs),
    /// Repeat a run for several CFL numbers and compare their cost.
    ScanCfl(ScanArgs),
    /// Print the built-in problems.
    ListProblems,
}

#[derive(Args)]
struct Common {
    /// Built-in problem, by full name or short prefix (`ex1`).
    #[arg(
        long,
        required_unless_present = "problem_file",
        conflicts_with = "problem_file"
    )]
    problem: Option<String>,
    /// TOML description of a custom problem.
    #[arg(long)]
    problem_file: Option<PathBuf>,
    #[arg(long, default_value = "fe-fsm")]
    scheme: SchemeKind,
    /// Mesh ladder, strictly increasing, each N >= 20.
    #[arg(long, value_delimiter = ',', default_value = "40,80,160")]
    n: Vec<usize>,
    /// `hweno` or `hybrid`.
    #[arg(long, default_value = "hweno")]
    mode: ReconstructionMode,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Iterations between history checkpoints.
    #[arg(long, default_value_t = DEFAULT_HISTORY_STRIDE)]
    stride: usize,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// CFL number; defaults to 0.1 for fe-jacobi and 1 otherwise.
    #[arg(long)]
    cfl: Option<f64>,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', required = true)]
    cfl: Vec<f64>,
}

fn usage(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("hj-sweep: {message}");
    ExitCode::from(EXIT_USAGE)
}

fn workers() -> Result<usize, String> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!(
                "{WORKERS_ENV} must be a positive integer, got `{v}`"
            )),
        },
    }
}

fn build_config(common: Common, cfls: Vec<f64>) -> Result<RunConfig, String> {
    let (problem, source) = match (common.problem, common.problem_file) {
        (Some(name), None) => {
            let p = by_name(&name).ok_or_else(|| {
                format!("unknown problem `{name}` (see `hj-sweep list-problems`)")
            })?;
            let source = ProblemSource::Builtin(p.name.clone());
            (p, source)
        }
        (None, Some(path)) => {
            let p = load_problem(&path).map_err(|e| e.to_string())?;
            let text =
                std::fs::read(&path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            (
                p,
                ProblemSource::File {
                    path,
                    contents: text,
                },
            )
        }
        _ => return Err("give exactly one of --problem and --problem-file".into()),
    };
    let config = RunConfig {
        problem,
        source,
        scheme: common.scheme,
        ladder: common.n,
        cfls,
        mode: common.mode,
        tol: common.tol,
        max_iter: common.max_iter,
        stride: common.stride,
        out: common.out,
        workers: workers()?,
    };
    config.validate()?;
    Ok(config)
}

fn exit_for(statuses: impl IntoIterator<Item = Status>) -> ExitCode {
    let mut code = 0;
    for s in statuses {
        let c = match s {
            Status::Converged => 0,
            Status::NotConverged => EXIT_NOT_CONVERGED,
            Status::Diverged { .. } => EXIT_DIVERGED,
        };
        code = code.max(c);
    }
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (config, scan) = match cli.command {
        Command::ListProblems => {
            for p in registry() {
                println!("{:<18} {}", p.name, p.summary);
            }
            return ExitCode::SUCCESS;
        }
        Command::Run(a) => {
            let cfl = a.cfl.unwrap_or(a.common.scheme.default_cfl());
            (build_config(a.common, vec![cfl]), false)
        }
        Command::ScanCfl(a) => (build_config(a.common, a.cfl), true),
    };
    let config = match config {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let result = if scan {
        study::run_cfl_scan(&config)
    } else {
        study::run_convergence_study(&config)
    };
    match result {
        Ok(records) => {
            for r in records.iter().filter(|r| r.status != Status::Converged) {
                eprintln!(
                    "hj-sweep: N={} cfl={}: {}",
                    r.n,
                    r.cfl,
                    r.status.describe(r.iterations)
                );
            }
            exit_for(records.iter().map(|r| r.status))
        }
        Err(e) => {
            eprintln!("hj-sweep: {e}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
