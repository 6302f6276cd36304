//! Convergence studies and CFL scans over independent solver runs.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use hj_sweep::problems::ProblemSpec;
use hj_sweep::solver::{solve, Checkpoint, ExecPolicy, SchemeConfig, SchemeKind};
use hj_sweep::{ReconstructionMode, SolveError};

use crate::output;

/// Where the problem came from, for the manifest and the input hash.
pub enum ProblemSource {
    Builtin(String),
    File { path: PathBuf, contents: Vec<u8> },
}

pub struct RunConfig {
    pub problem: ProblemSpec,
    pub source: ProblemSource,
    pub scheme: SchemeKind,
    pub ladder: Vec<usize>,
    pub cfls: Vec<f64>,
    pub mode: ReconstructionMode,
    pub tol: f64,
    pub max_iter: usize,
    pub stride: usize,
    pub out: PathBuf,
    pub workers: usize,
}

pub const MIN_N: usize = 20;

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.ladder.is_empty() {
            return Err("mesh ladder is empty".into());
        }
        if let Some(&n) = self.ladder.iter().find(|&&n| n < MIN_N) {
            return Err(format!("mesh size {n} is below the minimum of {MIN_N}"));
        }
        if self.ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!(
                "mesh ladder {:?} is not strictly increasing",
                self.ladder
            ));
        }
        if self.cfls.is_empty() {
            return Err("no CFL number given".into());
        }
        let mut seen = Vec::new();
        for &c in &self.cfls {
            if seen.contains(&c.to_bits()) {
                return Err(format!("CFL number {c} is listed twice"));
            }
            seen.push(c.to_bits());
        }
        for &c in &self.cfls {
            self.scheme_config(c)
                .validate()
                .map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    pub fn scheme_config(&self, cfl: f64) -> SchemeConfig {
        let mut c = SchemeConfig::new(self.scheme);
        c.cfl = cfl;
        c.tol = self.tol;
        c.max_iter = self.max_iter;
        c.history_stride = self.stride;
        c.reconstruction.mode = self.mode;
        // Concurrent runs already occupy the cores.
        if self.workers > 1 {
            c.exec = ExecPolicy::Sequential;
        }
        c
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    NotConverged,
    Diverged { i: isize, j: isize },
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::NotConverged => "not_converged",
            Self::Diverged { .. } => "diverged",
        }
    }

    pub fn describe(&self, iterations: usize) -> String {
        match self {
            Self::Converged => format!("converged after {iterations} iterations"),
            Self::NotConverged => format!("not converged after {iterations} iterations"),
            Self::Diverged { i, j } => {
                format!("diverged at node ({i}, {j}) after {iterations} iterations")
            }
        }
    }
}

/// Outcome of one `(N, cfl)` solve.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub n: usize,
    pub cfl: f64,
    pub status: Status,
    pub iterations: usize,
    pub final_delta: f64,
    pub l1: Option<f64>,
    pub linf: Option<f64>,
    pub order_l1: Option<f64>,
    pub order_linf: Option<f64>,
    pub hweno_evaluations: u64,
    pub linear_evaluations: u64,
    pub wall_time: f64,
    pub history: Vec<Checkpoint>,
}

impl RunRecord {
    /// One-sided reconstructions performed, a machine-independent cost.
    pub fn evaluations(&self) -> u64 {
        self.hweno_evaluations + self.linear_evaluations
    }
}

fn solve_one(config: &RunConfig, n: usize, cfl: f64) -> Result<RunRecord, String> {
    let grid = config.problem.grid(n).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let outcome = solve(&config.problem, grid, &config.scheme_config(cfl));
    let wall_time = start.elapsed().as_secs_f64();
    let (solution, status) = match outcome {
        Ok(s) => (s, Status::Converged),
        Err(SolveError::NotConverged(s)) => (*s, Status::NotConverged),
        Err(SolveError::Diverged { i, j, solution }) => (*solution, Status::Diverged { i, j }),
        Err(e) => return Err(format!("N={n} cfl={cfl}: {e}")),
    };
    let err = match status {
        Status::Diverged { .. } => None,
        _ => solution.error(),
    };
    Ok(RunRecord {
        n,
        cfl,
        status,
        iterations: solution.stats.iterations,
        final_delta: solution.stats.final_delta(),
        l1: err.map(|e| e.l1),
        linf: err.map(|e| e.linf),
        order_l1: None,
        order_linf: None,
        hweno_evaluations: solution.stats.counters.hweno,
        linear_evaluations: solution.stats.counters.linear,
        wall_time,
        history: solution.stats.checkpoints,
    })
}

/// Runs `jobs` on `config.workers` threads; results come back in job order.
fn execute(config: &RunConfig, jobs: &[(usize, f64)]) -> Result<Vec<RunRecord>, String> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<RunRecord, String>>>> = Mutex::new(vec![None; jobs.len()]);
    std::thread::scope(|scope| {
        for _ in 0..config.workers.min(jobs.len()) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(n, cfl)) = jobs.get(k) else { break };
                let r = solve_one(config, n, cfl);
                slots.lock().expect("no worker panicked")[k] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

/// `log(e_coarse / e_fine) / log(n_fine / n_coarse)`; `log2` of the error
/// ratio under mesh doubling.
pub fn observed_order(n_coarse: usize, e_coarse: f64, n_fine: usize, e_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (n_fine as f64 / n_coarse as f64).ln()
}

/// Fills the order columns of consecutive rows sharing a CFL number.
pub fn fill_orders(records: &mut [RunRecord]) {
    for k in 1..records.len() {
        let (head, tail) = records.split_at_mut(k);
        let (c, f) = (&head[k - 1], &mut tail[0]);
        if c.cfl.to_bits() != f.cfl.to_bits() {
            continue;
        }
        let order = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some(observed_order(c.n, a, f.n, b)),
            _ => None,
        };
        f.order_l1 = order(c.l1, f.l1);
        f.order_linf = order(c.linf, f.linf);
    }
}

pub fn run_convergence_study(config: &RunConfig) -> Result<Vec<RunRecord>, String> {
    let cfl = config.cfls[0];
    let jobs: Vec<_> = config.ladder.iter().map(|&n| (n, cfl)).collect();
    let mut records = execute(config, &jobs)?;
    fill_orders(&mut records);
    output::print_table(config, &records);
    output::write_study(config, &records, "run").map_err(|e| e.to_string())?;
    Ok(records)
}

pub fn run_cfl_scan(config: &RunConfig) -> Result<Vec<RunRecord>, String> {
    let jobs: Vec<_> = config
        .cfls
        .iter()
        .flat_map(|&c| config.ladder.iter().map(move |&n| (n, c)))
        .collect();
    let mut records = execute(config, &jobs)?;
    fill_orders(&mut records);
    output::print_table(config, &records);
    output::write_study(config, &records, "scan-cfl").map_err(|e| e.to_string())?;
    output::write_scan_summary(config, &records).map_err(|e| e.to_string())?;
    Ok(records)
}

/// Per mesh, the converged CFL number with the fewest reconstructions;
/// ties go to the fewer iterations, then the smaller CFL number.
pub fn fastest(records: &[RunRecord], n: usize) -> Option<f64> {
    records
        .iter()
        .filter(|r| r.n == n && r.status == Status::Converged)
        .min_by(|a, b| {
            (a.evaluations(), a.iterations)
                .cmp(&(b.evaluations(), b.iterations))
                .then(a.cfl.total_cmp(&b.cfl))
        })
        .map(|r| r.cfl)
}
